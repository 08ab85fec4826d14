#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sklab/errors.hpp"
#include "sklab/rng.hpp"

namespace sklab {

// Two-pass mean/variance in fixed index order, so results do not depend on
// how the samples were produced across threads.
inline double mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

inline double standard_error(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
};

// Percentile bootstrap CI for the sample variance.
inline ConfidenceInterval bootstrap_variance_ci(const std::vector<double>& xs,
                                                int n_resamples, std::uint64_t seed,
                                                double level = 0.95) {
    if (xs.size() < 2 || n_resamples < 2) return {0.0, 0.0};
    Substream rng(seed, 0xB001'57A9ULL);
    std::vector<double> vars(n_resamples);
    std::vector<double> resample(xs.size());
    for (int r = 0; r < n_resamples; ++r) {
        for (std::size_t i = 0; i < xs.size(); ++i)
            resample[i] = xs[static_cast<std::size_t>(rng.uniform() * xs.size())];
        vars[r] = sample_variance(resample);
    }
    std::sort(vars.begin(), vars.end());
    const double alpha = (1.0 - level) / 2.0;
    const auto pick = [&](double q) {
        const double pos = q * (vars.size() - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        const double frac = pos - i;
        return i + 1 < vars.size() ? vars[i] * (1.0 - frac) + vars[i + 1] * frac : vars[i];
    };
    return {pick(alpha), pick(1.0 - alpha)};
}

// Two-sample Kolmogorov-Smirnov statistic: sup_x |F1(x) - F2(x)| over the
// merged sample, ties handled by advancing both sides past equal values.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw ValidationError("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

// Asymptotic two-sample critical value at significance alpha:
// c(alpha) * sqrt((n+m)/(n m)) with c = sqrt(-ln(alpha/2)/2).
inline double ks_critical(double alpha, std::size_t n, std::size_t m) {
    if (n == 0 || m == 0) throw ValidationError("ks_critical: empty sample");
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(static_cast<double>(n + m) /
                         (static_cast<double>(n) * static_cast<double>(m)));
}

} // namespace sklab
