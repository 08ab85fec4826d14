#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sklab/demand.hpp"
#include "sklab/dp.hpp"
#include "sklab/errors.hpp"
#include "sklab/grid.hpp"
#include "sklab/rng.hpp"
#include "sklab/simulate.hpp"

namespace sklab {

// Exact DP values V(t, d^1..d^m) on the integer lattice. Reward per
// accepted request is the atom's price (total reward convention).
class MultiValueTable {
public:
    MultiValueTable(int horizon, std::vector<int> capacities)
        : horizon_(horizon), capacities_(std::move(capacities)) {
        std::size_t cells = static_cast<std::size_t>(horizon_ + 1);
        strides_.assign(capacities_.size(), 0);
        std::size_t lattice = 1;
        for (int k = static_cast<int>(capacities_.size()) - 1; k >= 0; --k) {
            strides_[k] = lattice;
            lattice *= static_cast<std::size_t>(capacities_[k] + 1);
        }
        lattice_size_ = lattice;
        cells *= lattice;
        if (cells > kDpCellBudget)
            throw ResourceError("MultiValueTable: " + std::to_string(cells) +
                                " cells exceeds budget of " + std::to_string(kDpCellBudget));
        values_.assign(cells, 0.0);
    }

    int horizon() const { return horizon_; }
    const std::vector<int>& capacities() const { return capacities_; }
    int dim() const { return static_cast<int>(capacities_.size()); }
    std::size_t lattice_size() const { return lattice_size_; }

    std::size_t lattice_index(const std::vector<int>& d) const {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < capacities_.size(); ++k) idx += d[k] * strides_[k];
        return idx;
    }

    double value(int t, const std::vector<int>& d) const {
        check(t, d);
        return values_[t * lattice_size_ + lattice_index(d)];
    }

    bool accept(int t, const std::vector<int>& d, double p,
                const std::vector<int>& q) const {
        if (t < 0 || t >= horizon_) throw std::out_of_range("accept: t out of range");
        check(t, d);
        std::vector<int> rem(d.size());
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (q[k] > d[k]) return false;
            rem[k] = d[k] - q[k];
        }
        return p + value(t + 1, rem) >= value(t + 1, d);
    }

    double& raw(std::size_t t, std::size_t lattice_idx) {
        return values_[t * lattice_size_ + lattice_idx];
    }
    double raw(std::size_t t, std::size_t lattice_idx) const {
        return values_[t * lattice_size_ + lattice_idx];
    }

    std::string to_csv() const {
        std::string out = "t";
        for (int k = 1; k <= dim(); ++k) out += ",d" + std::to_string(k);
        out += ",value\n";
        char buf[64];
        std::vector<int> d(dim(), 0);
        for (int t = 0; t <= horizon_; ++t) {
            std::fill(d.begin(), d.end(), 0);
            for (std::size_t i = 0; i < lattice_size_; ++i) {
                out += std::to_string(t);
                for (int v : d) out += "," + std::to_string(v);
                std::snprintf(buf, sizeof(buf), ",%.17g\n", raw(t, lattice_index(d)));
                out += buf;
                for (int k = dim() - 1; k >= 0; --k) {
                    if (++d[k] <= capacities_[k]) break;
                    d[k] = 0;
                }
            }
        }
        return out;
    }

private:
    void check(int t, const std::vector<int>& d) const {
        if (t < 0 || t > horizon_) throw std::out_of_range("MultiValueTable: t out of range");
        if (static_cast<int>(d.size()) != dim())
            throw ValidationError("MultiValueTable: capacity vector dimension mismatch");
        for (std::size_t k = 0; k < d.size(); ++k)
            if (d[k] < 0 || d[k] > capacities_[k])
                throw std::out_of_range("MultiValueTable: d out of range");
    }

    int horizon_;
    std::vector<int> capacities_;
    std::vector<std::size_t> strides_;
    std::size_t lattice_size_ = 0;
    std::vector<double> values_;
};

namespace detail {

template <class F>
void for_each_lattice_point(const std::vector<int>& capacities, F&& fn) {
    std::vector<int> d(capacities.size(), 0);
    for (;;) {
        fn(d);
        int k = static_cast<int>(capacities.size()) - 1;
        for (; k >= 0; --k) {
            if (++d[k] <= capacities[k]) break;
            d[k] = 0;
        }
        if (k < 0) break;
    }
}

} // namespace detail

inline MultiValueTable solve_dp_multi(const MultiDemandDistribution& dist,
                                      const std::vector<int>& W, int T) {
    if (static_cast<int>(W.size()) != dist.dim())
        throw ValidationError("solve_dp_multi: capacity vector dimension mismatch");
    for (int w : W)
        if (w < 0) throw ValidationError("solve_dp_multi: capacities must be >= 0");
    if (T < 1) throw ValidationError("solve_dp_multi: horizon must be >= 1");

    MultiValueTable table(T, W);
    const auto& atoms = dist.atoms();
    const int m = dist.dim();

    auto feasible = [&](const MultiDemandAtom& a, const std::vector<int>& d) {
        for (int k = 0; k < m; ++k)
            if (a.quantities[k] > d[k]) return false;
        return true;
    };

    detail::for_each_lattice_point(W, [&](const std::vector<int>& d) {
        double v = 0.0;
        for (const auto& a : atoms)
            if (feasible(a, d)) v += a.prob * a.price;
        table.raw(T, table.lattice_index(d)) = v;
    });

    std::vector<int> rem(m);
    for (int t = T - 1; t >= 0; --t) {
        detail::for_each_lattice_point(W, [&](const std::vector<int>& d) {
            const std::size_t li = table.lattice_index(d);
            const double cont = table.raw(t + 1, li);
            double v = cont * (dist.no_arrival_prob() + dist.multi_theta_tail(d));
            for (const auto& a : atoms) {
                if (feasible(a, d)) {
                    for (int k = 0; k < m; ++k) rem[k] = d[k] - a.quantities[k];
                    v += a.prob *
                         std::max(a.price + table.raw(t + 1, table.lattice_index(rem)), cont);
                }
            }
            table.raw(t, li) = v;
        });
    }
    return table;
}

namespace detail {

inline double enumerate_value_multi(const MultiDemandDistribution& dist, int s, int T,
                                    std::vector<int>& d) {
    if (s > T) return 0.0;
    const int m = dist.dim();
    double v = dist.no_arrival_prob() * enumerate_value_multi(dist, s + 1, T, d);
    for (const auto& a : dist.atoms()) {
        bool feasible = true;
        for (int k = 0; k < m; ++k)
            if (a.quantities[k] > d[k]) {
                feasible = false;
                break;
            }
        if (!feasible) {
            v += a.prob * enumerate_value_multi(dist, s + 1, T, d);
        } else {
            const double rej = enumerate_value_multi(dist, s + 1, T, d);
            for (int k = 0; k < m; ++k) d[k] -= a.quantities[k];
            const double acc = a.price + enumerate_value_multi(dist, s + 1, T, d);
            for (int k = 0; k < m; ++k) d[k] += a.quantities[k];
            v += a.prob * std::max(acc, rej);
        }
    }
    return v;
}

} // namespace detail

inline double enumeration_oracle_multi(const MultiDemandDistribution& dist,
                                       const std::vector<int>& W, int T, int t) {
    if (t > T) throw ValidationError("enumeration_oracle_multi: t must be <= T");
    const int periods = T - t + 1;
    const double branches = static_cast<double>(dist.atoms().size() + 1);
    if (std::pow(branches, periods) > 1e7)
        throw ResourceError("enumeration_oracle_multi: instance too large to enumerate");
    std::vector<int> d = W;
    return detail::enumerate_value_multi(dist, t, T, d);
}

using MultiG = std::function<double(const std::vector<double>&)>;
using MultiH = std::function<double(const std::vector<double>&)>;

// Fluid limit in m capacity dimensions: u_{x0} + G(u_{x1},..,u_{xm}) = 0,
// terminal data at x0 = X, zero on every x_k = 0 face.
struct MultiFluidField {
    NdGrid grid;                             // axis 0: time, axes 1..m: capacities
    std::vector<double> u;
    std::vector<std::vector<double>> grad;   // grad[axis], same layout as u

    int dim() const { return grid.ndim() - 1; }

    double interp_u(const std::vector<double>& point) const {
        return interpolate(grid, u, point);
    }
    double interp_grad(int axis, const std::vector<double>& point) const {
        return interpolate(grid, grad[axis], point);
    }
};

namespace detail {

inline void fill_multi_derivatives(MultiFluidField& f) {
    const int nd = f.grid.ndim();
    f.grad.assign(nd, std::vector<double>(f.u.size(), 0.0));
    std::vector<int> iv(nd, 0);
    std::vector<std::size_t> strides(nd);
    std::size_t acc = 1;
    for (int k = nd - 1; k >= 0; --k) {
        strides[k] = acc;
        acc *= f.grid.shape[k];
    }
    const std::size_t total = f.grid.size();
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        for (int k = 0; k < nd; ++k) {
            iv[k] = static_cast<int>(rem / strides[k]);
            rem %= strides[k];
        }
        for (int k = 0; k < nd; ++k) {
            const double h = f.grid.spacing(k);
            const int n = f.grid.shape[k];
            double v;
            if (iv[k] == 0)
                v = (f.u[idx + strides[k]] - f.u[idx]) / h;
            else if (iv[k] == n - 1)
                v = (f.u[idx] - f.u[idx - strides[k]]) / h;
            else
                v = (f.u[idx + strides[k]] - f.u[idx - strides[k]]) / (2.0 * h);
            f.grad[k][idx] = v;
        }
    }
}

} // namespace detail

inline MultiFluidField solve_fluid_multi(const MultiG& G, const MultiH& h, double X,
                                         const std::vector<double>& Y,
                                         int nx0, const std::vector<int>& ncap) {
    const int m = static_cast<int>(Y.size());
    if (m < 1 || m > 3)
        throw ValidationError("solve_fluid_multi: grid solver supports 1 <= m <= 3");
    if (static_cast<int>(ncap.size()) != m)
        throw ValidationError("solve_fluid_multi: grid size vector dimension mismatch");

    MultiFluidField f;
    f.grid.shape.assign(1, nx0);
    f.grid.extent.assign(1, X);
    for (int k = 0; k < m; ++k) {
        f.grid.shape.push_back(ncap[k]);
        f.grid.extent.push_back(Y[k]);
    }
    f.grid.validate();
    f.u.assign(f.grid.size(), 0.0);

    const double dx = f.grid.spacing(0);
    // per-axis LF dissipation from the secant slope of G at the origin
    std::vector<double> alpha(m, 0.0);
    {
        const double delta = 1e-8;
        std::vector<double> z(m, 0.0);
        const double g0 = G(z);
        double cfl = 0.0;
        for (int k = 0; k < m; ++k) {
            z[k] = delta;
            const double a = (g0 - G(z)) / delta;
            z[k] = 0.0;
            alpha[k] = a > 0.0 ? a : 0.0;
            cfl += alpha[k] / f.grid.spacing(k + 1);
        }
        if (dx * cfl > 1.0) {
            const int suggested = static_cast<int>(std::ceil(X * cfl)) + 1;
            throw NumericalError("solve_fluid_multi: CFL violation; need nx0 >= " +
                                 std::to_string(suggested));
        }
    }

    // capacity lattice bookkeeping
    std::size_t lattice = 1;
    std::vector<std::size_t> cstride(m);
    for (int k = m - 1; k >= 0; --k) {
        cstride[k] = lattice;
        lattice *= static_cast<std::size_t>(ncap[k]);
    }

    std::vector<double> slice(lattice), next(lattice);
    std::vector<int> iv(m);
    std::vector<double> point(m);
    for (std::size_t idx = 0; idx < lattice; ++idx) {
        std::size_t rem = idx;
        bool on_zero_face = false;
        for (int k = 0; k < m; ++k) {
            iv[k] = static_cast<int>(rem / cstride[k]);
            rem %= cstride[k];
            point[k] = f.grid.coord(k + 1, iv[k]);
            if (iv[k] == 0) on_zero_face = true;
        }
        double v = on_zero_face ? 0.0 : h(point);
        slice[idx] = v;
    }

    auto store = [&](int i, const std::vector<double>& s) {
        const std::size_t base = static_cast<std::size_t>(i) * lattice;
        for (std::size_t idx = 0; idx < lattice; ++idx) f.u[base + idx] = s[idx];
    };
    store(nx0 - 1, slice);

    std::vector<double> z(m);
    for (int i = nx0 - 1; i >= 1; --i) {
        for (std::size_t idx = 0; idx < lattice; ++idx) {
            std::size_t rem = idx;
            bool on_zero_face = false;
            for (int k = 0; k < m; ++k) {
                iv[k] = static_cast<int>(rem / cstride[k]);
                rem %= cstride[k];
                if (iv[k] == 0) on_zero_face = true;
            }
            if (on_zero_face) {
                next[idx] = 0.0;
                continue;
            }
            double visc = 0.0;
            for (int k = 0; k < m; ++k) {
                const double dyk = f.grid.spacing(k + 1);
                const double dm = (slice[idx] - slice[idx - cstride[k]]) / dyk;
                const double dp = iv[k] + 1 < ncap[k]
                                      ? (slice[idx + cstride[k]] - slice[idx]) / dyk
                                      : dm;
                z[k] = 0.5 * (dm + dp);
                visc += 0.5 * alpha[k] * (dp - dm);
            }
            next[idx] = slice[idx] + dx * (G(z) + visc);
        }
        store(i - 1, next);
        slice.swap(next);
    }

    detail::fill_multi_derivatives(f);
    return f;
}

namespace detail {

// Determinant by partial-pivot LU; matrices here are at most 4x4.
inline double small_det(std::vector<std::vector<double>> a) {
    const int n = static_cast<int>(a.size());
    double det = 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (a[piv][c] == 0.0) return 0.0;
        if (piv != c) {
            std::swap(a[piv], a[c]);
            det = -det;
        }
        det *= a[c][c];
        for (int r = c + 1; r < n; ++r) {
            const double fac = a[r][c] / a[c][c];
            for (int cc = c; cc < n; ++cc) a[r][cc] -= fac * a[c][cc];
        }
    }
    return det;
}

inline double abs_permanent(const std::vector<std::vector<double>>& a,
                            std::vector<bool>& used, int row) {
    const int n = static_cast<int>(a.size());
    if (row == n) return 1.0;
    double s = 0.0;
    for (int c = 0; c < n; ++c) {
        if (used[c]) continue;
        used[c] = true;
        s += std::abs(a[row][c]) * abs_permanent(a, used, row + 1);
        used[c] = false;
    }
    return s;
}

} // namespace detail

// Max over interior nodes of |det D^2 u| normalized by the max permanent
// of |D^2 u| (the 2-D case reduces to the monge_ampere_residual
// normalization). As there, the maxima skip a 5% frame next to the
// boundary and determinants below rounding noise count as zero.
inline double hessian_det_residual(const MultiFluidField& f) {
    const int nd = f.grid.ndim();
    for (int k = 0; k < nd; ++k)
        if (f.grid.shape[k] < 7)
            throw ValidationError("hessian_det_residual: need at least 5 interior nodes per axis");

    std::vector<std::size_t> strides(nd);
    std::size_t acc = 1;
    for (int k = nd - 1; k >= 0; --k) {
        strides[k] = acc;
        acc *= f.grid.shape[k];
    }
    std::vector<int> iv(nd, 1);
    std::vector<std::vector<double>> H(nd, std::vector<double>(nd, 0.0));
    std::vector<bool> used(nd, false);
    double max_det = 0.0, max_denom = 0.0, umax = 0.0;
    for (double v : f.u) umax = std::max(umax, std::abs(v));
    for (;;) {
        std::size_t idx = 0;
        bool in_frame = false;
        for (int k = 0; k < nd; ++k) {
            idx += static_cast<std::size_t>(iv[k]) * strides[k];
            const double c = f.grid.coord(k, iv[k]), w = 0.05 * f.grid.extent[k];
            if (c < w || c > f.grid.extent[k] - w) in_frame = true;
        }
        if (in_frame) {
            int kk = nd - 1;
            for (; kk >= 0; --kk) {
                if (++iv[kk] <= f.grid.shape[kk] - 2) break;
                iv[kk] = 1;
            }
            if (kk < 0) break;
            continue;
        }
        for (int a = 0; a < nd; ++a) {
            const double ha = f.grid.spacing(a);
            H[a][a] = (f.u[idx + strides[a]] - 2.0 * f.u[idx] + f.u[idx - strides[a]]) /
                      (ha * ha);
            for (int b = a + 1; b < nd; ++b) {
                const double hb = f.grid.spacing(b);
                const double v = (f.u[idx + strides[a] + strides[b]] -
                                  f.u[idx + strides[a] - strides[b]] -
                                  f.u[idx - strides[a] + strides[b]] +
                                  f.u[idx - strides[a] - strides[b]]) /
                                 (4.0 * ha * hb);
                H[a][b] = v;
                H[b][a] = v;
            }
        }
        max_det = std::max(max_det, std::abs(detail::small_det(H)));
        max_denom = std::max(max_denom, detail::abs_permanent(H, used, 0));

        int k = nd - 1;
        for (; k >= 0; --k) {
            if (++iv[k] <= f.grid.shape[k] - 2) break;
            iv[k] = 1;
        }
        if (k < 0) break;
    }
    // second-difference entries carry rounding noise ~ eps*umax/(h_a h_b),
    // so the determinant noise is the per-axis product below
    const double eps = std::numeric_limits<double>::epsilon();
    double noise = 1.0;
    for (int k = 0; k < nd; ++k)
        noise *= 32.0 * eps * umax / (f.grid.spacing(k) * f.grid.spacing(k));
    return max_det > noise && max_denom > 0.0 ? max_det / max_denom : 0.0;
}

// Fairlie-Leznov construction in m dimensions: gradients from R, the
// characteristic map from C = (D^2 R)^{-1} DL (named C here to avoid
// clashing with demand quantities).
struct MultiParametricSolution {
    int m = 0;
    std::function<double(const std::vector<double>&)> R;
    std::function<std::vector<double>(const std::vector<double>&)> DR;
    std::function<std::vector<std::vector<double>>(const std::vector<double>&)> D2R;
    std::function<std::vector<double>(const std::vector<double>&)> DL;
    std::vector<double> xi_guess;
    // anchor fixing the additive constant of u: coordinates (x0, x1..xm)
    std::vector<double> anchor;
    double u_anchor = 0.0;
};

struct MultiParametricPoint {
    double u = 0.0;
    std::vector<double> gradient;  // (u_{x0}, u_{x1}, .., u_{xm})
    std::vector<double> xi;
};

namespace detail {

inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
    const int n = static_cast<int>(a.size());
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (a[piv][c] == 0.0) throw NumericalError("singular linear system");
        std::swap(a[piv], a[c]);
        std::swap(b[piv], b[c]);
        for (int r = c + 1; r < n; ++r) {
            const double fac = a[r][c] / a[c][c];
            for (int cc = c; cc < n; ++cc) a[r][cc] -= fac * a[c][cc];
            b[r] -= fac * b[c];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return x;
}

inline std::vector<double> characteristic_map(const MultiParametricSolution& sol,
                                              const std::vector<double>& xi) {
    return solve_linear(sol.D2R(xi), sol.DL(xi));
}

// Newton on x_j - xi_j x0 = C^j(xi).
inline std::vector<double> solve_xi(const MultiParametricSolution& sol, double x0,
                                    const std::vector<double>& x,
                                    const std::vector<double>& guess) {
    const int m = sol.m;
    std::vector<double> xi = guess;
    for (int it = 0; it < 50; ++it) {
        const auto C = characteristic_map(sol, xi);
        std::vector<double> res(m);
        double norm = 0.0;
        for (int j = 0; j < m; ++j) {
            res[j] = x[j] - xi[j] * x0 - C[j];
            norm = std::max(norm, std::abs(res[j]));
        }
        if (norm < 1e-12) return xi;
        // Jacobian of the residual: -x0 I - DC, DC by central differences
        std::vector<std::vector<double>> J(m, std::vector<double>(m, 0.0));
        const double delta = 1e-7;
        for (int k = 0; k < m; ++k) {
            auto xp = xi, xm_ = xi;
            xp[k] += delta;
            xm_[k] -= delta;
            const auto Cp = characteristic_map(sol, xp);
            const auto Cm = characteristic_map(sol, xm_);
            for (int j = 0; j < m; ++j) J[j][k] = -(Cp[j] - Cm[j]) / (2.0 * delta);
            J[k][k] -= x0;
        }
        const auto step = solve_linear(J, res);
        for (int j = 0; j < m; ++j) xi[j] -= step[j];
    }
    std::string msg = "evaluate_parametric_multi: Newton failed to converge; last xi = (";
    for (int j = 0; j < m; ++j) msg += (j ? "," : "") + std::to_string(xi[j]);
    throw NumericalError(msg + ")");
}

} // namespace detail

inline MultiParametricPoint evaluate_parametric_multi(const MultiParametricSolution& sol,
                                                      double x0,
                                                      const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != sol.m)
        throw ValidationError("evaluate_parametric_multi: point dimension mismatch");
    MultiParametricPoint p;
    p.xi = detail::solve_xi(sol, x0, x, sol.xi_guess);

    auto gradient_at = [&](const std::vector<double>& xi) {
        const auto dr = sol.DR(xi);
        double u0 = sol.R(xi);
        for (int j = 0; j < sol.m; ++j) u0 -= xi[j] * dr[j];
        std::vector<double> g(sol.m + 1);
        g[0] = u0;
        for (int j = 0; j < sol.m; ++j) g[j + 1] = dr[j];
        return g;
    };
    p.gradient = gradient_at(p.xi);

    // line integral of the gradient from the anchor
    static const double gl_x[4] = {0.069431844202973712, 0.330009478207571868,
                                   0.669990521792428132, 0.930568155797026288};
    static const double gl_w[4] = {0.173927422568726929, 0.326072577431273071,
                                   0.326072577431273071, 0.173927422568726929};
    std::vector<double> dir(sol.m + 1);
    dir[0] = x0 - sol.anchor[0];
    for (int j = 0; j < sol.m; ++j) dir[j + 1] = x[j] - sol.anchor[j + 1];
    const int pieces = 48;
    double integral = 0.0;
    std::vector<double> xi_warm = sol.xi_guess;
    std::vector<double> xs(sol.m);
    for (int k = 0; k < pieces; ++k) {
        for (int q = 0; q < 4; ++q) {
            const double s = (k + gl_x[q]) / pieces;
            const double x0s = sol.anchor[0] + s * dir[0];
            for (int j = 0; j < sol.m; ++j) xs[j] = sol.anchor[j + 1] + s * dir[j + 1];
            xi_warm = detail::solve_xi(sol, x0s, xs, xi_warm);
            const auto g = gradient_at(xi_warm);
            double dot = 0.0;
            for (int j = 0; j <= sol.m; ++j) dot += g[j] * dir[j];
            integral += gl_w[q] / pieces * dot;
        }
    }
    p.u = sol.u_anchor + integral;
    return p;
}

// Joint center system: ds^k/dt driven by the fluid gradient at the
// current depletion state.
struct MultiCenterPath {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<std::vector<double>> s;  // [step][component]

    int dim() const { return s.empty() ? 0 : static_cast<int>(s.front().size()); }

    std::vector<double> at(double t) const {
        const double pos = (t - t0) / dt;
        if (pos < -1e-9 || pos > s.size() - 1 + 1e-9)
            throw ValidationError("MultiCenterPath: time outside mesh");
        const std::size_t i = static_cast<std::size_t>(std::max(0.0, pos));
        if (i + 1 >= s.size()) return s.back();
        const double frac = pos - i;
        std::vector<double> out(dim());
        for (int k = 0; k < dim(); ++k)
            out[k] = s[i][k] * (1.0 - frac) + s[i + 1][k] * frac;
        return out;
    }
};

enum class MultiRateMode { component_prob, verbatim_G };

inline MultiCenterPath solve_centers_ode(const MultiFluidField& field,
                                         const MultiDemandDistribution& dist,
                                         MultiRateMode mode, const std::vector<double>& d,
                                         double t0, double t1, double dt) {
    const int m = dist.dim();
    if (static_cast<int>(d.size()) != m)
        throw ValidationError("solve_centers_ode: capacity dimension mismatch");
    if (dt <= 0.0 || t1 <= t0) throw ValidationError("solve_centers_ode: bad time span");

    auto rates = [&](double t, const std::vector<double>& s) {
        std::vector<double> point(m + 1);
        point[0] = t;
        for (int k = 0; k < m; ++k) {
            // RK stages may overshoot the stock
            const double y = d[k] - (s[k] > d[k] ? d[k] : s[k]);
            if (y < -1e-9 || y > field.grid.extent[k + 1] + 1e-9)
                throw ValidationError("solve_centers_ode: sweep leaves the field domain");
            point[k + 1] = y;
        }
        std::vector<double> z(m);
        for (int k = 0; k < m; ++k) z[k] = field.interp_grad(k + 1, point);
        std::vector<double> r(m);
        for (int k = 0; k < m; ++k)
            r[k] = mode == MultiRateMode::component_prob
                       ? dist.component_consume_prob(z, k)
                       : dist.multi_G(z);
        return r;
    };

    const int n = static_cast<int>(std::ceil((t1 - t0) / dt - 1e-12));
    MultiCenterPath path;
    path.t0 = t0;
    path.dt = (t1 - t0) / n;
    path.s.assign(n + 1, std::vector<double>(m, 0.0));
    std::vector<double> tmp(m);
    for (int i = 0; i < n; ++i) {
        const double t = t0 + i * path.dt;
        const auto& s = path.s[i];
        const double hdt = path.dt;
        const auto k1 = rates(t, s);
        for (int k = 0; k < m; ++k) tmp[k] = s[k] + 0.5 * hdt * k1[k];
        const auto k2 = rates(t + 0.5 * hdt, tmp);
        for (int k = 0; k < m; ++k) tmp[k] = s[k] + 0.5 * hdt * k2[k];
        const auto k3 = rates(t + 0.5 * hdt, tmp);
        for (int k = 0; k < m; ++k) tmp[k] = s[k] + hdt * k3[k];
        const auto k4 = rates(t + hdt, tmp);
        for (int k = 0; k < m; ++k) {
            double next = s[k] + hdt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
            if (next > d[k]) next = d[k];
            path.s[i + 1][k] = next;
        }
    }
    return path;
}

// Component SDE system: m independent Brownian drivers, per-component
// Euler-Maruyama. Path k, component c draws from substream k*m + c so the
// m = 1 case is bit-identical to the 1-D simulator.
struct MultiSdePathSet {
    int m = 0;
    MultiCenterPath center;
    double dt = 0.0;
    std::uint64_t seed = 0;
    bool clamped = false;
    std::vector<double> record_times;
    std::vector<std::vector<double>> Y;  // [path][record*m + component]
};

inline MultiSdePathSet multi_sde(const MultiCenterPath& center,
                                 const std::function<std::vector<double>(double)>& sigma_sq,
                                 double t0, double t1, double dt, int n_paths,
                                 std::uint64_t seed, std::vector<double> record_times = {},
                                 int n_threads = 1) {
    if (dt <= 0.0 || t1 <= t0) throw ValidationError("multi_sde: bad time span");
    const int m = center.dim();
    const int n = static_cast<int>(std::ceil((t1 - t0) / dt - 1e-12));
    const double h = (t1 - t0) / n;
    if (record_times.empty()) record_times = {t0, t1};

    MultiSdePathSet out;
    out.m = m;
    out.center = center;
    out.dt = h;
    out.seed = seed;
    out.record_times = record_times;

    std::vector<std::vector<double>> sigma(m, std::vector<double>(n, 0.0));
    for (int step = 0; step < n; ++step) {
        const auto s2 = sigma_sq(t0 + step * h);
        for (int c = 0; c < m; ++c) {
            double v = s2[c];
            if (v < 0.0) {
                out.clamped = true;
                v = 0.0;
            }
            sigma[c][step] = std::sqrt(v);
        }
    }
    std::vector<int> rec_step(record_times.size());
    for (std::size_t r = 0; r < record_times.size(); ++r) {
        const double pos = (record_times[r] - t0) / h;
        if (pos < -1e-6 || pos > n + 1e-6)
            throw ValidationError("multi_sde: record time outside span");
        rec_step[r] = static_cast<int>(std::lround(pos));
    }

    out.Y.assign(n_paths, std::vector<double>(record_times.size() * m, 0.0));
    const double sqrt_h = std::sqrt(h);
    detail::parallel_paths(n_paths, n_threads, [&](int k) {
        for (int c = 0; c < m; ++c) {
            Substream rng(seed, static_cast<std::uint64_t>(k) * m + c);
            double y = 0.0;
            std::size_t r = 0;
            for (; r < rec_step.size() && rec_step[r] == 0; ++r) out.Y[k][r * m + c] = 0.0;
            for (int step = 0; step < n; ++step) {
                const double dw = sqrt_h * rng.normal();
                const double dy = sigma[c][step] * dw;
                y += dy;
                for (; r < rec_step.size() && rec_step[r] == step + 1; ++r)
                    out.Y[k][r * m + c] = y;
            }
        }
    });
    return out;
}

// Coefficient wiring for the multi SDE, mirroring simulate_diffusion.
inline MultiSdePathSet simulate_diffusion_multi(const MultiFluidField& field,
                                                const MultiDemandDistribution& dist,
                                                MultiRateMode mode,
                                                const std::vector<double>& d,
                                                const MultiCenterPath& center, double t0,
                                                double t1, double dt, int n_paths,
                                                std::uint64_t seed,
                                                std::vector<double> record_times = {},
                                                int n_threads = 1) {
    const int m = dist.dim();
    auto sigma_sq = [&field, &dist, mode, d, &center, m](double t) {
        const auto s = center.at(t);
        std::vector<double> point(m + 1);
        point[0] = t;
        for (int k = 0; k < m; ++k) point[k + 1] = d[k] - s[k];
        std::vector<double> z(m);
        for (int k = 0; k < m; ++k) z[k] = field.interp_grad(k + 1, point);
        std::vector<double> out(m);
        for (int k = 0; k < m; ++k) {
            const double a = mode == MultiRateMode::component_prob
                                 ? dist.component_consume_prob(z, k)
                                 : dist.multi_G(z);
            out[k] = a * (1.0 - a);
        }
        return out;
    };
    return multi_sde(center, sigma_sq, t0, t1, dt, n_paths, seed, std::move(record_times),
                     n_threads);
}

} // namespace sklab
