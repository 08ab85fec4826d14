#include <catch_amalgamated.hpp>

#include <cmath>

#include "sklab/fluid.hpp"

using namespace sklab;

namespace {

// Smooth closed-form pair: g(x) = (1-x)^2/2 for x <= 1 together with
// R(xi) = xi + xi^2/2 solves the transport equation exactly along the
// straight characteristics y - x xi = -2 xi.
ScalarFn quadratic_g() {
    return [](double x) { return x < 1.0 ? 0.5 * (1.0 - x) * (1.0 - x) : 0.0; };
}

ParametricSolution quadratic_solution(double u0 = 0.0, double x0 = 0.25, double y0 = 0.5) {
    ParametricSolution sol;
    sol.R = [](double xi) { return xi + 0.5 * xi * xi; };
    sol.Rp = [](double xi) { return 1.0 + xi; };
    sol.f = [](double xi) { return -2.0 * xi; };
    sol.xi_lo = -0.9;
    sol.xi_hi = -0.05;
    sol.x0 = x0;
    sol.y0 = y0;
    sol.u0 = u0;
    return sol;
}

double pde_residual(const ParametricSolution& sol, const ScalarFn& g, double x, double y) {
    const auto p = evaluate_parametric(sol, x, y);
    return p.ux + g(p.uy);
}

} // namespace

TEST_CASE("quadratic pair: transport residual vanishes pointwise") {
    const auto sol = quadratic_solution();
    const auto g = quadratic_g();
    for (double x : {0.0, 0.1, 0.3, 0.5}) {
        for (int j = 1; j <= 8; ++j) {
            const double y = 0.15 + (1.2 - 0.15) * j / 9.0;
            CHECK(std::abs(pde_residual(sol, g, x, y)) < 1e-10);
        }
    }
}

TEST_CASE("reported derivatives match finite differences of u") {
    const auto sol = quadratic_solution(0.3);
    const double x = 0.3, y = 0.7, h = 1e-5;
    const auto p = evaluate_parametric(sol, x, y);
    const double dudx =
        (evaluate_parametric(sol, x + h, y).u - evaluate_parametric(sol, x - h, y).u) /
        (2.0 * h);
    const double dudy =
        (evaluate_parametric(sol, x, y + h).u - evaluate_parametric(sol, x, y - h).u) /
        (2.0 * h);
    CHECK(p.ux == Catch::Approx(dudx).margin(1e-6));
    CHECK(p.uy == Catch::Approx(dudy).margin(1e-6));
}

TEST_CASE("anchor fixes the additive constant") {
    const auto sol = quadratic_solution(1.25, 0.2, 0.6);
    CHECK(evaluate_parametric(sol, 0.2, 0.6).u == Catch::Approx(1.25).margin(1e-10));
}

TEST_CASE("characteristic solutions have a degenerate Hessian") {
    const auto sol = quadratic_solution();
    const double h = 1e-4;
    for (double x : {0.1, 0.4}) {
        for (double y : {0.3, 0.8}) {
            const auto xp = evaluate_parametric(sol, x + h, y);
            const auto xm = evaluate_parametric(sol, x - h, y);
            const auto yp = evaluate_parametric(sol, x, y + h);
            const auto ym = evaluate_parametric(sol, x, y - h);
            const double uxx = (xp.ux - xm.ux) / (2.0 * h);
            const double uyy = (yp.uy - ym.uy) / (2.0 * h);
            const double uxy = (yp.ux - ym.ux) / (2.0 * h);
            const double det = uxx * uyy - uxy * uxy;
            const double denom = std::abs(uxx * uyy) + uxy * uxy;
            REQUIRE(denom > 0.0);
            CHECK(std::abs(det) / denom < 1e-4);
        }
    }
}

TEST_CASE("points off every characteristic are rejected") {
    const auto sol = quadratic_solution();
    CHECK_THROWS_AS(evaluate_parametric(sol, 0.0, 5.0), NumericalError);
}

TEST_CASE("exponential flux: residual vanishes and matches the closed form at gamma = 1/2") {
    const double gamma = 0.5;
    const auto sol = exponential_parametric(
        gamma, [](double xi) { return -xi; }, -0.45, -0.05, 0.4, 0.15, 0.0);
    const ScalarFn g = [gamma](double x) { return std::exp(-gamma * x); };
    for (double x : {0.0, 0.2, 0.4, 0.6}) {
        const double lo = 0.05 * (1.0 - x) + 0.01, hi = 0.45 * (1.0 - x) - 0.01;
        for (int j = 0; j <= 6; ++j) {
            const double y = lo + (hi - lo) * j / 6.0;
            CHECK(std::abs(pde_residual(sol, g, x, y)) < 1e-10);
        }
    }
    // with gamma = 1/2 the slope map equals -log(xi/(gamma-1))/gamma
    for (double xi : {-0.4, -0.25, -0.1}) {
        CHECK(sol.Rp(xi) ==
              Catch::Approx(-std::log(xi / (gamma - 1.0)) / gamma).margin(1e-12));
    }
}

TEST_CASE("exponential flux parameter validation") {
    const ScalarFn f = [](double xi) { return -xi; };
    CHECK_THROWS_AS(exponential_parametric(0.0, f, -0.1, -0.05), ValidationError);
    CHECK_THROWS_AS(exponential_parametric(0.5, f, -0.6, -0.05), ValidationError);
    CHECK_THROWS_AS(exponential_parametric(0.5, f, -0.4, 0.1), ValidationError);
    CHECK_THROWS_AS(exponential_parametric(0.5, f, -0.05, -0.4), ValidationError);
}

TEST_CASE("grid march reproduces the parametric solution away from the floor") {
    const double X = 0.5, Y = 1.3;
    const auto sol = quadratic_solution(0.1, X, 0.15);
    const auto g = quadratic_g();
    const double y_cut = 0.15;
    const double base = 0.1;  // u at the anchor (X, y_cut)
    const ScalarFn h = [&](double y) {
        if (y < y_cut) return base * y / y_cut;
        return evaluate_parametric(sol, X, y).u;
    };
    const auto field = solve_grid(g, h, X, Y, 121, 281);
    double worst = 0.0;
    for (double x : {0.0, 0.1, 0.2, 0.3, 0.4}) {
        for (double y = 0.8; y <= 1.3; y += 0.1) {
            const double exact = evaluate_parametric(sol, x, y).u;
            worst = std::max(worst, std::abs(field.interp_u(x, y) - exact));
        }
    }
    CHECK(worst < 0.02);
}
