#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "sklab/demand.hpp"
#include "sklab/errors.hpp"
#include "sklab/fluid.hpp"
#include "sklab/rng.hpp"
#include "sklab/simulate.hpp"
#include "sklab/stats.hpp"

namespace sklab {

// Two readings of the F in the center ODE / SDE coefficient: the Bernoulli
// acceptance probability (a true probability), or the loss function g taken
// verbatim, clamped where g(1-g) goes negative.
enum class ThresholdMode { accept_prob, verbatim_g };

inline double threshold_rate(const DemandDistribution& dist, ThresholdMode mode,
                             double threshold) {
    return mode == ThresholdMode::accept_prob ? dist.accept_prob(threshold)
                                              : dist.loss_g(threshold);
}

// Deterministic center s(t) sampled on a uniform mesh.
struct CenterPath {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> s;

    double t_end() const { return t0 + dt * (s.size() - 1); }

    double operator()(double t) const {
        const double pos = (t - t0) / dt;
        if (pos < -1e-9 || pos > s.size() - 1 + 1e-9)
            throw ValidationError("CenterPath: time outside mesh");
        const std::size_t i = static_cast<std::size_t>(std::max(0.0, pos));
        if (i + 1 >= s.size()) return s.back();
        const double frac = pos - i;
        return s[i] * (1.0 - frac) + s[i + 1] * frac;
    }
};

// RK4 on ds/dt = F(u_y(t, d - s(t))), s(t0) = 0, with u_y interpolated
// bilinearly from the fluid field.
inline CenterPath solve_center_ode(const FluidField& field, const DemandDistribution& dist,
                                   ThresholdMode mode, double d, double t0, double t1,
                                   double dt) {
    if (dt <= 0.0 || t1 <= t0) throw ValidationError("solve_center_ode: bad time span");
    auto rate = [&](double t, double s) {
        const double y = d - (s > d ? d : s);  // RK stages may overshoot the stock
        if (t < -1e-9 || t > field.x_max() + 1e-9 || y < -1e-9 || y > field.y_max() + 1e-9)
            throw ValidationError("solve_center_ode: sweep leaves the field domain");
        return threshold_rate(dist, mode, field.interp_uy(t, y));
    };
    const int n = static_cast<int>(std::ceil((t1 - t0) / dt - 1e-12));
    CenterPath path;
    path.t0 = t0;
    path.dt = (t1 - t0) / n;
    path.s.assign(n + 1, 0.0);
    for (int k = 0; k < n; ++k) {
        const double t = t0 + k * path.dt;
        const double s = path.s[k];
        const double hdt = path.dt;
        const double k1 = rate(t, s);
        const double k2 = rate(t + 0.5 * hdt, s + 0.5 * hdt * k1);
        const double k3 = rate(t + 0.5 * hdt, s + 0.5 * hdt * k2);
        const double k4 = rate(t + hdt, s + hdt * k3);
        double next = s + hdt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (next > d) next = d;  // cannot supply more than the initial stock
        path.s[k + 1] = next;
    }
    return path;
}

// Euler-Maruyama paths of the limiting fluctuation (Y) and revenue (Z)
// diffusions, recorded at the requested times only.
struct SdePathSet {
    CenterPath center;
    double dt = 0.0;
    std::uint64_t seed = 0;
    bool clamped = false;  // verbatim-g mode produced g(1-g) < 0 somewhere
    std::vector<double> record_times;
    std::vector<std::vector<double>> Y;  // [path][record index]
    std::vector<std::vector<double>> Z;
};

// sigma_sq(t): diffusion coefficient squared; price(t): factor in
// dZ = P dY. Both depend on time only, so they are tabulated once and the
// per-path loop is pure arithmetic.
inline SdePathSet euler_maruyama(const CenterPath& center,
                                 const std::function<double(double)>& sigma_sq,
                                 const std::function<double(double)>& price, double t0,
                                 double t1, double dt, int n_paths, std::uint64_t seed,
                                 std::vector<double> record_times = {}, int n_threads = 1) {
    if (dt <= 0.0 || t1 <= t0) throw ValidationError("euler_maruyama: bad time span");
    const int n = static_cast<int>(std::ceil((t1 - t0) / dt - 1e-12));
    const double h = (t1 - t0) / n;
    if (record_times.empty()) record_times = {t0, t1};

    SdePathSet out;
    out.center = center;
    out.dt = h;
    out.seed = seed;
    out.record_times = record_times;

    std::vector<double> sigma(n, 0.0), p(n, 0.0);
    for (int k = 0; k < n; ++k) {
        const double t = t0 + k * h;
        double s2 = sigma_sq(t);
        if (s2 < 0.0) {
            out.clamped = true;
            s2 = 0.0;
        }
        sigma[k] = std::sqrt(s2);
        p[k] = price(t);
    }
    // record step index per requested time
    std::vector<int> rec_step(record_times.size());
    for (std::size_t r = 0; r < record_times.size(); ++r) {
        const double pos = (record_times[r] - t0) / h;
        if (pos < -1e-6 || pos > n + 1e-6)
            throw ValidationError("euler_maruyama: record time outside span");
        rec_step[r] = static_cast<int>(std::lround(pos));
    }

    out.Y.assign(n_paths, std::vector<double>(record_times.size(), 0.0));
    out.Z.assign(n_paths, std::vector<double>(record_times.size(), 0.0));
    const double sqrt_h = std::sqrt(h);
    detail::parallel_paths(n_paths, n_threads, [&](int k) {
        Substream rng(seed, k);
        double y = 0.0, z = 0.0;
        std::size_t r = 0;
        for (; r < rec_step.size() && rec_step[r] == 0; ++r) {
            out.Y[k][r] = 0.0;
            out.Z[k][r] = 0.0;
        }
        for (int step = 0; step < n; ++step) {
            const double dw = sqrt_h * rng.normal();
            const double dy = sigma[step] * dw;
            y += dy;
            z += p[step] * dy;
            for (; r < rec_step.size() && rec_step[r] == step + 1; ++r) {
                out.Y[k][r] = y;
                out.Z[k][r] = z;
            }
        }
    });
    return out;
}

// Convenience wrapper wiring the coefficient of the limiting SDE from the
// fluid field: sigma^2(t) = A(1-A) with A = F(u_y(t, d-s(t))).
inline SdePathSet simulate_diffusion(const FluidField& field, const DemandDistribution& dist,
                                     ThresholdMode mode, double d, const CenterPath& center,
                                     double t0, double t1, double dt, int n_paths,
                                     std::uint64_t seed, std::vector<double> record_times = {},
                                     int n_threads = 1) {
    auto sigma_sq = [&field, &dist, mode, d, &center](double t) {
        const double a = threshold_rate(dist, mode, field.interp_uy(t, d - center(t)));
        return a * (1.0 - a);
    };
    auto price = [&field, &dist, d, &center](double t) {
        return dist.mean_accepted_price(field.interp_uy(t, d - center(t)));
    };
    return euler_maruyama(center, sigma_sq, price, t0, t1, dt, n_paths, seed,
                          std::move(record_times), n_threads);
}

struct FluctuationRow {
    double t = 0.0;
    double var_empirical = 0.0;
    double var_sde = 0.0;
};

struct FluctuationReport {
    std::vector<FluctuationRow> rows;
    double ks_stat = 0.0;
    double ks_crit_1pct = 0.0;
};

// Scaled Monte Carlo fluctuations against the SDE marginals: variances at
// each requested time plus a two-sample KS statistic at the last one.
inline FluctuationReport fluctuation_compare(const PathEnsemble& ensemble,
                                             const SdePathSet& sde,
                                             const DemandDistribution& dist, double n,
                                             const std::vector<double>& times,
                                             bool allow_general_batch = false) {
    if (!dist.unit_demand() && !allow_general_batch)
        throw ValidationError(
            "fluctuation_compare: non-unit-demand law needs the experimental "
            "general-batch mode enabled explicitly");
    auto center_fn = [&sde](double t) { return sde.center(t); };
    const auto fluct = scaled_fluctuations(ensemble, center_fn, n, times);

    FluctuationReport report;
    std::vector<double> sde_terminal, mc_terminal;
    for (std::size_t i = 0; i < times.size(); ++i) {
        // locate the matching SDE record time
        std::size_t r = 0;
        bool found = false;
        for (; r < sde.record_times.size(); ++r) {
            if (std::abs(sde.record_times[r] - times[i]) < 1e-9) {
                found = true;
                break;
            }
        }
        if (!found)
            throw ValidationError("fluctuation_compare: SDE paths were not recorded at t=" +
                                  std::to_string(times[i]));
        std::vector<double> sde_vals(sde.Y.size());
        for (std::size_t k = 0; k < sde.Y.size(); ++k) sde_vals[k] = sde.Y[k][r];
        report.rows.push_back({times[i], sample_variance(fluct[i]), sample_variance(sde_vals)});
        if (i + 1 == times.size()) {
            sde_terminal = std::move(sde_vals);
            mc_terminal = fluct[i];
        }
    }
    report.ks_stat = ks_statistic(mc_terminal, sde_terminal);
    report.ks_crit_1pct = ks_critical(0.01, mc_terminal.size(), sde_terminal.size());
    return report;
}

} // namespace sklab
