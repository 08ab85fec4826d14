#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "sklab/demand.hpp"
#include "sklab/dp.hpp"
#include "sklab/errors.hpp"
#include "sklab/rng.hpp"
#include "sklab/stats.hpp"

namespace sklab {

// Seeded trajectories of the optimal policy: running reward and units
// supplied per path, for s = t0..T inclusive.
struct PathEnsemble {
    int t0 = 0;
    int horizon = 0;
    int d0 = 0;
    int n_paths = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> rewards;   // [path][s - t0]
    std::vector<std::vector<double>> supplied;  // [path][s - t0]

    int n_steps() const { return horizon - t0 + 1; }
};

namespace detail {

// Runs one path of the DP policy. on_step(step_index, reward, supplied) is
// invoked once per period after the decision at that period settles.
template <class F>
void run_policy_path(const DemandDistribution& dist, const ValueTable& table, int t0,
                     int T, int d0, Substream rng, F&& on_step) {
    const auto& atoms = dist.atoms();
    double reward = 0.0;
    int supplied = 0;
    int d = d0;
    for (int s = t0; s <= T; ++s) {
        const double u = rng.uniform();
        double cum = 0.0;
        const DemandAtom* arrival = nullptr;
        for (const auto& a : atoms) {
            cum += a.prob;
            if (u < cum) {
                arrival = &a;
                break;
            }
        }
        if (arrival) {
            const bool ok = s < T ? table.accept(s, d, arrival->price, arrival->quantity)
                                  : arrival->quantity <= d;  // terminal: accept feasible
            if (ok) {
                reward += arrival->price * arrival->quantity;
                supplied += arrival->quantity;
                d -= arrival->quantity;
            }
        }
        on_step(s - t0, reward, supplied);
    }
}

template <class PathFn>
void parallel_paths(int n_paths, int n_threads, PathFn&& path_fn) {
    if (n_threads <= 1) {
        for (int k = 0; k < n_paths; ++k) path_fn(k);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&, w] {
            for (int k = w; k < n_paths; k += n_threads) path_fn(k);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace detail

inline void validate_sim_inputs(const ValueTable& table, int t, int d, int T) {
    if (T > table.horizon())
        throw ValidationError("simulate: table horizon " + std::to_string(table.horizon()) +
                              " < requested horizon " + std::to_string(T));
    if (d > table.capacity())
        throw ValidationError("simulate: table capacity " + std::to_string(table.capacity()) +
                              " < requested capacity " + std::to_string(d));
    if (t < 0 || t > T) throw ValidationError("simulate: start time out of range");
    if (d < 0) throw ValidationError("simulate: capacity must be >= 0");
}

// Full-trajectory ensemble. Path k draws from substream (seed, k), so the
// result is bit-identical for any thread count.
inline PathEnsemble simulate(const DemandDistribution& dist, const ValueTable& table,
                             int t, int d, int n_paths, std::uint64_t seed,
                             int n_threads = 1) {
    validate_sim_inputs(table, t, d, table.horizon());
    const int T = table.horizon();
    PathEnsemble ens;
    ens.t0 = t;
    ens.horizon = T;
    ens.d0 = d;
    ens.n_paths = n_paths;
    ens.seed = seed;
    ens.rewards.assign(n_paths, std::vector<double>(ens.n_steps(), 0.0));
    ens.supplied.assign(n_paths, std::vector<double>(ens.n_steps(), 0.0));
    detail::parallel_paths(n_paths, n_threads, [&](int k) {
        detail::run_policy_path(dist, table, t, T, d, Substream(seed, k),
                                [&](int i, double reward, int supplied) {
                                    ens.rewards[k][i] = reward;
                                    ens.supplied[k][i] = supplied;
                                });
    });
    return ens;
}

// Terminal rewards only; used where full trajectories would not fit.
inline std::vector<double> simulate_terminal_rewards(const DemandDistribution& dist,
                                                     const ValueTable& table, int t, int d,
                                                     int n_paths, std::uint64_t seed,
                                                     int n_threads = 1) {
    validate_sim_inputs(table, t, d, table.horizon());
    const int T = table.horizon();
    std::vector<double> terminal(n_paths, 0.0);
    detail::parallel_paths(n_paths, n_threads, [&](int k) {
        detail::run_policy_path(dist, table, t, T, d, Substream(seed, k),
                                [&](int, double reward, int) { terminal[k] = reward; });
    });
    return terminal;
}

struct VarianceScalingRow {
    int n = 0;
    double var_over_n = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

// Var[X_{nt,nd}(nT)]/n over a ladder of scales; the Lemma says this stays
// bounded as n grows.
inline std::vector<VarianceScalingRow> variance_scaling(const DemandDistribution& dist,
                                                        int t, int d, int T,
                                                        const std::vector<int>& n_list,
                                                        int n_paths, std::uint64_t seed,
                                                        int n_threads = 1) {
    std::vector<VarianceScalingRow> rows;
    rows.reserve(n_list.size());
    for (int n : n_list) {
        if (n < 1) throw ValidationError("variance_scaling: scale must be >= 1");
        const ValueTable table = solve_dp(dist, n * d, n * T);
        const auto terminal = simulate_terminal_rewards(dist, table, n * t, n * d, n_paths,
                                                        seed + static_cast<std::uint64_t>(n),
                                                        n_threads);
        const double var = sample_variance(terminal);
        const auto ci = bootstrap_variance_ci(terminal, 200, seed ^ n);
        rows.push_back({n, var / n, ci.lo / n, ci.hi / n});
    }
    return rows;
}

// n^{-1/2} (y(n t) - n s(t)) for each path, at each requested fluid time.
inline std::vector<std::vector<double>> scaled_fluctuations(
    const PathEnsemble& ensemble, const std::function<double(double)>& center, double n,
    const std::vector<double>& times) {
    std::vector<std::vector<double>> out;
    out.reserve(times.size());
    const double inv_sqrt_n = 1.0 / std::sqrt(n);
    for (double tau : times) {
        const double s_abs = n * tau;
        const long step = std::lround(s_abs) - ensemble.t0;
        if (step < 0 || step >= ensemble.n_steps())
            throw ValidationError("scaled_fluctuations: time " + std::to_string(tau) +
                                  " outside the simulated horizon");
        const double centered = n * center(tau);
        std::vector<double> vals(ensemble.n_paths);
        for (int k = 0; k < ensemble.n_paths; ++k)
            vals[k] = inv_sqrt_n * (ensemble.supplied[k][step] - centered);
        out.push_back(std::move(vals));
    }
    return out;
}

} // namespace sklab
