#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sklab/errors.hpp"
#include "sklab/grid.hpp"

namespace sklab {

using ScalarFn = std::function<double(double)>;

// Numerical solution of u_x + g(u_y) = 0 on [0,X] x [0,Y] with terminal
// data u(X,y) = h(y) and the hard constraint u(x,0) = 0. x is scaled
// elapsed time, y scaled remaining capacity.
struct FluidField {
    NdGrid grid;            // axis 0: x (nx nodes), axis 1: y (ny nodes)
    std::vector<double> u;
    std::vector<double> ux;
    std::vector<double> uy;

    int nx() const { return grid.shape[0]; }
    int ny() const { return grid.shape[1]; }
    double x_max() const { return grid.extent[0]; }
    double y_max() const { return grid.extent[1]; }

    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * grid.shape[1] + j;
    }

    double value(int i, int j) const { return u[idx(i, j)]; }

    double interp_u(double x, double y) const { return interpolate(grid, u, {x, y}); }
    double interp_uy(double x, double y) const { return interpolate(grid, uy, {x, y}); }
};

namespace detail {

// Fills one-sided/central difference derivative grids for a 2-D field.
inline void fill_derivatives(FluidField& f) {
    const int nx = f.nx(), ny = f.ny();
    const double dx = f.grid.spacing(0), dy = f.grid.spacing(1);
    f.ux.assign(f.u.size(), 0.0);
    f.uy.assign(f.u.size(), 0.0);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            if (i == 0)
                f.ux[f.idx(i, j)] = (f.value(1, j) - f.value(0, j)) / dx;
            else if (i == nx - 1)
                f.ux[f.idx(i, j)] = (f.value(nx - 1, j) - f.value(nx - 2, j)) / dx;
            else
                f.ux[f.idx(i, j)] = (f.value(i + 1, j) - f.value(i - 1, j)) / (2.0 * dx);
            if (j == 0)
                f.uy[f.idx(i, j)] = (f.value(i, 1) - f.value(i, 0)) / dy;
            else if (j == ny - 1)
                f.uy[f.idx(i, j)] = (f.value(i, ny - 1) - f.value(i, ny - 2)) / dy;
            else
                f.uy[f.idx(i, j)] = (f.value(i, j + 1) - f.value(i, j - 1)) / (2.0 * dy);
        }
    }
}

// |g'(0+)| by a short secant; g is convex nonincreasing and u_y >= 0, so
// this bounds |g'| over the whole sweep.
inline double lf_alpha(const ScalarFn& g) {
    const double delta = 1e-8;
    const double a = (g(0.0) - g(delta)) / delta;
    return a > 0.0 ? a : 0.0;
}

} // namespace detail

// Monotone Lax-Friedrichs march backward in x from the terminal slice.
inline FluidField solve_grid(const ScalarFn& g, const ScalarFn& h, double X, double Y,
                             int nx, int ny) {
    if (nx < 2 || ny < 2) throw ValidationError("solve_grid: need at least 2x2 nodes");
    if (X <= 0.0 || Y <= 0.0) throw ValidationError("solve_grid: extents must be positive");

    FluidField f;
    f.grid.shape = {nx, ny};
    f.grid.extent = {X, Y};
    f.grid.validate();
    f.u.assign(f.grid.size(), 0.0);

    const double dx = f.grid.spacing(0);
    const double dy = f.grid.spacing(1);
    const double alpha = detail::lf_alpha(g);
    if (alpha * dx > dy) {
        const int suggested = static_cast<int>(std::ceil(X * alpha / dy)) + 1;
        throw NumericalError("solve_grid: CFL violation (alpha*dx > dy); need nx >= " +
                             std::to_string(suggested));
    }

    std::vector<double> slice(ny), next(ny);
    for (int j = 0; j < ny; ++j) slice[j] = h(f.grid.coord(1, j));
    if (std::abs(slice[0]) > 1e-12)
        throw ValidationError("solve_grid: terminal data must satisfy h(0) = 0");
    for (int j = 1; j < ny; ++j)
        if (slice[j] < slice[j - 1] - 1e-12)
            throw ValidationError("solve_grid: terminal data must be nondecreasing");
    slice[0] = 0.0;

    for (int j = 0; j < ny; ++j) f.u[f.idx(nx - 1, j)] = slice[j];

    for (int i = nx - 1; i >= 1; --i) {
        next[0] = 0.0;  // u(x, 0) = 0 each step
        for (int j = 1; j < ny; ++j) {
            const double dm = (slice[j] - slice[j - 1]) / dy;
            const double dp = j + 1 < ny ? (slice[j + 1] - slice[j]) / dy : dm;
            next[j] = slice[j] + dx * (g(0.5 * (dm + dp)) + 0.5 * alpha * (dp - dm));
        }
        for (int j = 0; j < ny; ++j) f.u[f.idx(i - 1, j)] = next[j];
        slice.swap(next);
    }

    detail::fill_derivatives(f);
    return f;
}

struct MongeAmpereResult {
    int nx = 0;
    int ny = 0;
    std::vector<double> residual;  // interior nodes, (nx-2) x (ny-2), row-major
    double max_normalized = 0.0;
};

// Checks u_xx u_yy - u_xy^2 = 0 on interior nodes via second differences.
// max_normalized is max |det| over max (|u_xx u_yy| + u_xy^2), a global
// ratio: per-node ratios blow up wherever all curvatures sit at rounding
// noise. A pure-mixed field like u = x y scores exactly 1. The maxima skip
// a frame of 5% of each extent next to the boundary: the marching scheme
// leaves a self-similar startup layer at the terminal/floor corner whose
// amplitude is constant at fixed cell offset, so only a fixed physical
// margin lets the sup converge. Determinants below the rounding-noise
// level of the second differences count as zero.
inline MongeAmpereResult monge_ampere_residual(const FluidField& f) {
    const int nx = f.nx(), ny = f.ny();
    if (nx < 7 || ny < 7)
        throw ValidationError("monge_ampere_residual: need at least 5x5 interior nodes");
    const double dx = f.grid.spacing(0), dy = f.grid.spacing(1);
    const double wx = 0.05 * f.x_max(), wy = 0.05 * f.y_max();
    MongeAmpereResult r;
    r.nx = nx - 2;
    r.ny = ny - 2;
    r.residual.assign(static_cast<std::size_t>(r.nx) * r.ny, 0.0);
    double max_det = 0.0, max_denom = 0.0, umax = 0.0;
    for (double v : f.u) umax = std::max(umax, std::abs(v));
    for (int i = 1; i + 1 < nx; ++i) {
        for (int j = 1; j + 1 < ny; ++j) {
            const double uxx =
                (f.value(i + 1, j) - 2.0 * f.value(i, j) + f.value(i - 1, j)) / (dx * dx);
            const double uyy =
                (f.value(i, j + 1) - 2.0 * f.value(i, j) + f.value(i, j - 1)) / (dy * dy);
            const double uxy = (f.value(i + 1, j + 1) - f.value(i + 1, j - 1) -
                                f.value(i - 1, j + 1) + f.value(i - 1, j - 1)) /
                               (4.0 * dx * dy);
            const double det = uxx * uyy - uxy * uxy;
            r.residual[static_cast<std::size_t>(i - 1) * r.ny + (j - 1)] = det;
            const double x = f.grid.coord(0, i), y = f.grid.coord(1, j);
            if (x < wx || x > f.x_max() - wx || y < wy || y > f.y_max() - wy) continue;
            max_det = std::max(max_det, std::abs(det));
            max_denom = std::max(max_denom, std::abs(uxx * uyy) + uxy * uxy);
        }
    }
    const double eps = std::numeric_limits<double>::epsilon();
    const double noise = 1024.0 * eps * eps * umax * umax / (dx * dx * dy * dy);
    r.max_normalized = max_det > noise && max_denom > 0.0 ? max_det / max_denom : 0.0;
    return r;
}

// Fairlie-Leznov parametric solution: u_x = R - xi R', u_y = R' along the
// straight characteristics y - x xi = f(xi). The xi-domain must be an
// interval on which xi -> x xi + f(xi) is monotone for the swept x.
struct ParametricSolution {
    ScalarFn R;
    ScalarFn Rp;  // dR/dxi
    ScalarFn f;
    double xi_lo = 0.0;
    double xi_hi = 0.0;
    // anchor fixing the additive constant of u
    double x0 = 0.0;
    double y0 = 0.0;
    double u0 = 0.0;
};

struct ParametricPoint {
    double u = 0.0;
    double ux = 0.0;
    double uy = 0.0;
    double xi = 0.0;
};

namespace detail {

inline double solve_characteristic_root(const ParametricSolution& sol, double x, double y) {
    auto F = [&](double xi) { return x * xi + sol.f(xi) - y; };
    double lo = sol.xi_lo, hi = sol.xi_hi;
    double flo = F(lo), fhi = F(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw NumericalError(
            "evaluate_parametric: no characteristic through (x,y)=(" + std::to_string(x) +
            "," + std::to_string(y) + ") in the declared xi-domain (possible crossing)");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = F(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// Derivatives from the characteristic through (x,y); u by the line
// integral of (u_x, u_y) from the anchor along the straight segment.
inline ParametricPoint evaluate_parametric(const ParametricSolution& sol, double x,
                                           double y) {
    ParametricPoint p;
    p.xi = detail::solve_characteristic_root(sol, x, y);
    p.ux = sol.R(p.xi) - p.xi * sol.Rp(p.xi);
    p.uy = sol.Rp(p.xi);

    const double dx = x - sol.x0, dy = y - sol.y0;
    // 4-point Gauss-Legendre on [0,1] per segment piece
    static const double gl_x[4] = {0.069431844202973712, 0.330009478207571868,
                                   0.669990521792428132, 0.930568155797026288};
    static const double gl_w[4] = {0.173927422568726929, 0.326072577431273071,
                                   0.326072577431273071, 0.173927422568726929};
    const int pieces = 64;
    double integral = 0.0;
    for (int k = 0; k < pieces; ++k) {
        for (int q = 0; q < 4; ++q) {
            const double s = (k + gl_x[q]) / pieces;
            const double xs = sol.x0 + s * dx;
            const double ys = sol.y0 + s * dy;
            const double xi = detail::solve_characteristic_root(sol, xs, ys);
            const double ux = sol.R(xi) - xi * sol.Rp(xi);
            const double uy = sol.Rp(xi);
            integral += gl_w[q] / pieces * (ux * dx + uy * dy);
        }
    }
    p.u = sol.u0 + integral;
    return p;
}

// Exponential special case g(x) = exp(-gamma x). The inverse
// slope map is R'(xi) = -log(-xi/gamma)/gamma on xi in (-gamma, 0); the
// integration constant of R is fixed so u_x + g(u_y) vanishes identically.
inline ParametricSolution exponential_parametric(double gamma, ScalarFn f, double xi_lo,
                                                 double xi_hi, double x0 = 0.0,
                                                 double y0 = 0.0, double u0 = 0.0) {
    if (gamma <= 0.0) throw ValidationError("exponential_parametric: gamma must be > 0");
    if (!(xi_lo < xi_hi) || xi_hi >= 0.0 || xi_lo <= -gamma)
        throw ValidationError("exponential_parametric: xi-domain must lie in (-gamma, 0)");
    ParametricSolution sol;
    sol.R = [gamma](double xi) {
        const double w = -xi / gamma;
        return w * std::log(w) - w;
    };
    sol.Rp = [gamma](double xi) { return -std::log(-xi / gamma) / gamma; };
    sol.f = std::move(f);
    sol.xi_lo = xi_lo;
    sol.xi_hi = xi_hi;
    sol.x0 = x0;
    sol.y0 = y0;
    sol.u0 = u0;
    return sol;
}

} // namespace sklab
