#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sklab/demand.hpp"
#include "sklab/errors.hpp"

namespace sklab {

// Upper bound on DP table cells; larger requests are refused rather than
// silently thrashing memory.
inline constexpr std::size_t kDpCellBudget = 50'000'000;

// Exact value table V(t, d), t = 0..T, d = 0..W, with the induced
// accept/reject policy. Immutable after solve_dp.
class ValueTable {
public:
    ValueTable(int horizon, int capacity)
        : horizon_(horizon), capacity_(capacity),
          values_(static_cast<std::size_t>(horizon + 1) * (capacity + 1), 0.0) {}

    int horizon() const { return horizon_; }
    int capacity() const { return capacity_; }

    double value(int t, int d) const {
        check(t, d);
        return values_[idx(t, d)];
    }

    // Threshold rule: accept iff feasible and p*q + V(t+1, d-q) >= V(t+1, d).
    bool accept(int t, int d, double p, int q) const {
        if (t < 0 || t >= horizon_)
            throw std::out_of_range("accept: t out of range");
        check(t, d);
        if (q < 1) throw ValidationError("accept: quantity must be >= 1");
        if (q > d) return false;
        return p * q + values_[idx(t + 1, d - q)] >= values_[idx(t + 1, d)];
    }

    std::string to_csv() const {
        std::string out = "t,d,value\n";
        char buf[64];
        for (int t = 0; t <= horizon_; ++t) {
            for (int d = 0; d <= capacity_; ++d) {
                std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", t, d, values_[idx(t, d)]);
                out += buf;
            }
        }
        return out;
    }

    double& at(int t, int d) { return values_[idx(t, d)]; }

private:
    std::size_t idx(int t, int d) const {
        return static_cast<std::size_t>(t) * (capacity_ + 1) + d;
    }
    void check(int t, int d) const {
        if (t < 0 || t > horizon_ || d < 0 || d > capacity_)
            throw std::out_of_range("ValueTable: (t,d) out of range");
    }

    int horizon_;
    int capacity_;
    std::vector<double> values_;
};

// Backward recursion over V(t,d). Terminal row accepts every feasible
// request; earlier rows compare accept vs reject per arrival.
inline ValueTable solve_dp(const DemandDistribution& dist, int W, int T) {
    if (W < 0) throw ValidationError("solve_dp: capacity must be >= 0");
    if (T < 1) throw ValidationError("solve_dp: horizon must be >= 1");
    const std::size_t cells = static_cast<std::size_t>(T + 1) * (W + 1);
    if (cells > kDpCellBudget)
        throw ResourceError("solve_dp: table of " + std::to_string(cells) +
                            " cells exceeds budget of " + std::to_string(kDpCellBudget));

    ValueTable table(T, W);
    const auto& atoms = dist.atoms();

    for (int d = 0; d <= W; ++d) {
        double v = 0.0;
        for (const auto& a : atoms)
            if (a.quantity <= d) v += a.prob * (a.price * a.quantity);
        table.at(T, d) = v;
    }

    for (int t = T - 1; t >= 0; --t) {
        for (int d = 0; d <= W; ++d) {
            const double cont = table.at(t + 1, d);
            double v = cont * (dist.no_arrival_prob() + dist.theta_tail(d));
            for (const auto& a : atoms) {
                if (a.quantity <= d)
                    v += a.prob * std::max(a.price * a.quantity + table.at(t + 1, d - a.quantity),
                                           cont);
            }
            table.at(t, d) = v;
        }
    }
    return table;
}

namespace detail {

inline double enumerate_value(const DemandDistribution& dist, int s, int T, int d) {
    if (s > T) return 0.0;
    double v = dist.no_arrival_prob() * enumerate_value(dist, s + 1, T, d);
    for (const auto& a : dist.atoms()) {
        if (a.quantity > d) {
            v += a.prob * enumerate_value(dist, s + 1, T, d);
        } else {
            const double rej = enumerate_value(dist, s + 1, T, d);
            const double acc =
                a.price * a.quantity + enumerate_value(dist, s + 1, T, d - a.quantity);
            v += a.prob * std::max(acc, rej);
        }
    }
    return v;
}

} // namespace detail

// Ground truth for solve_dp on tiny instances: exhaustive recursion over
// all demand sequences and feasible actions, no value table involved.
inline double enumeration_oracle(const DemandDistribution& dist, int W, int T, int t) {
    if (t > T) throw ValidationError("enumeration_oracle: t must be <= T");
    const int periods = T - t + 1;
    const double branches = static_cast<double>(dist.atoms().size() + 1);
    if (std::pow(branches, periods) > 1e7)
        throw ResourceError("enumeration_oracle: " + std::to_string(periods) +
                            " periods over " + std::to_string(dist.atoms().size() + 1) +
                            " outcomes is too large to enumerate");
    return detail::enumerate_value(dist, t, T, W);
}

} // namespace sklab
