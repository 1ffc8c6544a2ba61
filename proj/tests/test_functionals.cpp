#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lifespan/functionals.hpp"
#include "lifespan/heat_kernel.hpp"
#include "lifespan/quadrature.hpp"

using namespace lifespan;

namespace {

constexpr double kPi = std::numbers::pi;

SolutionSnapshot sampled_snapshot(const RadialGrid& grid, double t, double (*u)(double, double),
                                  double (*v)(double, double)) {
    SolutionSnapshot snap{t, std::vector<double>(grid.size()), std::vector<double>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        snap.u[i] = u(t, grid.node(i));
        snap.v[i] = v(t, grid.node(i));
    }
    return snap;
}

double heat_like(double t, double r) { return std::exp(-r * r / (4.0 * (t + 1.0))); }
double zero_field(double, double) { return 0.0; }

// Velocity field used for the direct evaluation of B.
double test_velocity(double tau, double y) { return std::exp(-y * y / (2.0 * (1.0 + tau))) / (1.0 + tau); }

struct RunData {
    RadialGrid grid;
    ProblemSpec spec;
    std::vector<SolutionSnapshot> trace;
};

RunData solve(int dim, double p, double eps, double t_max, double dr, double cadence, double velocity_scale = 1.0) {
    RadialGrid grid = make_grid(dim, t_max, dr);
    auto [f, g] = sample_initial_profiles("bump", grid, velocity_scale);
    ProblemSpec spec{dim, p, eps, std::move(f), std::move(g), t_max, true};
    SolverConfig cfg;
    cfg.snapshot_cadence = cadence;
    RunResult r = run(spec, grid, 0.5 * dr, cfg);
    return {grid, std::move(spec), std::move(r.trace)};
}

}  // namespace

TEST_CASE("G and F of a heat-like profile match Gaussian integrals") {
    for (int n : {1, 2, 3, 4}) {
        for (double t : {0.0, 1.5, 6.0}) {
            // the r^{n-1} trapezoid is second order at the origin for even n
            const RadialGrid grid = RadialGrid::covering(n, 0.005, truncation_radius(t + 1.0) + 1.0);
            const SolutionSnapshot snap = sampled_snapshot(grid, t, heat_like, zero_field);
            CHECK(compute_G(snap, grid) == doctest::Approx(std::pow(2.0 * kPi * (t + 1.0), 0.5 * n)).epsilon(1e-5));
            for (double p : {1.5, 2.0, 3.0}) {
                const double inner = std::pow(4.0 * kPi * (t + 1.0) / (1.0 + p), 0.5 * n);
                const double expected = std::pow(inner, 1.0 / p) * std::pow(t + 1.0, 0.5 * n * (p - 1.0) / p);
                CHECK(compute_F(snap, grid, p) == doctest::Approx(expected).epsilon(1e-5));
            }
            CHECK(compute_A(snap, grid) == 0.0);
        }
    }
}

TEST_CASE("functionals vanish on zero data and are positive on admissible data") {
    const RadialGrid grid = make_grid(2, 1.0, 0.02);
    const SolutionSnapshot zero{0.7, std::vector<double>(grid.size(), 0.0), std::vector<double>(grid.size(), 0.0)};
    CHECK(compute_G(zero, grid) == 0.0);
    CHECK(compute_F(zero, grid, 2.0) == 0.0);
    CHECK(compute_A(zero, grid) == 0.0);

    auto [f, g] = sample_initial_profiles("cone", grid);
    const double eps = 0.3;
    SolutionSnapshot start{0.0, f.values, g.values};
    for (double& x : start.u) x *= eps;
    for (double& x : start.v) x *= eps;
    CHECK(compute_G(start, grid) == doctest::Approx(eps * weighted_moment(f, 1.0, 0)));
    CHECK(compute_A(start, grid) == doctest::Approx(eps * weighted_moment(g, 1.0, 0)));
    CHECK(compute_G(start, grid) > 0.0);
}

TEST_CASE("F carries the (t+1)^{n/(n+2)} factor at the critical power") {
    const RadialGrid grid = make_grid(4, 2.0, 0.02);
    auto [f, g] = sample_initial_profiles("bump", grid);
    for (double t : {0.0, 1.0, 3.0}) {
        const SolutionSnapshot snap{t, f.values, g.values};
        std::vector<double> powered = f.values;
        for (double& x : powered) x = std::pow(x, 1.5);
        const double weighted = weighted_moment(RadialProfile(grid, powered), t + 1.0, 0);
        CHECK(compute_F(snap, grid, 1.5) / std::pow(weighted, 1.0 / 1.5) ==
              doctest::Approx(std::pow(t + 1.0, 2.0 / 3.0)).epsilon(1e-12));
    }
}

TEST_CASE("inequality constants") {
    CHECK(holder_constant(4, 1.5) == doctest::Approx(std::pow(4.0 * kPi, 4.0 / 6.0)).epsilon(1e-14));
    CHECK(holder_constant(1, 3.0) == doctest::Approx(std::pow(4.0 * kPi, 1.0 / 3.0)).epsilon(1e-14));
    // K^{p'} = int e^{-|x|^2/4s} (|x|^2/4s^2)^{p'} dx times s^{p'-n/2}, checked at s = 1
    for (int n : {1, 2, 4}) {
        for (double p : {1.5, 2.0, 3.0}) {
            const double conj = p / (p - 1.0);
            const auto radial = [&](double r) {
                return unit_sphere_area(n) * std::pow(r, n - 1) * std::exp(-r * r / 4.0) * std::pow(r * r / 4.0, conj);
            };
            double integral = 0.0;
            for (int k = 0; k < 40; ++k) integral += adaptive_simpson(radial, k, k + 1.0, 1e-13).value;
            CHECK(moment_bound_constant(n, p) == doctest::Approx(std::pow(integral, 1.0 / conj)).epsilon(1e-8));
        }
    }
}

TEST_CASE("B in reduced form agrees with the direct double integral") {
    // n = 1 trace of an explicit velocity field; the direct form integrates
    // E(t+1, x) E_s(t - tau, x - y) v(tau, y) over x and y for each tau.
    const double t = 1.0;
    const RadialGrid grid = RadialGrid::covering(1, 0.01, 25.0);
    std::vector<SolutionSnapshot> trace;
    for (int k = 0; k <= 100; ++k) trace.push_back(sampled_snapshot(grid, 0.01 * k, zero_field, test_velocity));
    const double reduced = compute_B(trace, grid, t);

    const GaussRule rule = gauss_legendre(24);
    double direct = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double tau = 0.5 * t * (rule.nodes[q] + 1.0);
        const double s = t - tau;
        const double reach = truncation_radius(s);
        const auto inner = [&](double x) {
            const auto kern = [&](double y) {
                return kernel_time_derivative(s, std::abs(x - y), 1) * test_velocity(tau, y);
            };
            const double conv = adaptive_simpson(kern, x - reach, x + reach, 1e-11).value;
            return eval_kernel(t + 1.0, std::abs(x), 1) * conv;
        };
        const double outer_reach = truncation_radius(t + 1.0);
        direct += 0.5 * t * rule.weights[q] * adaptive_simpson(inner, -outer_reach, outer_reach, 1e-10).value;
    }
    direct *= std::sqrt(4.0 * kPi * (t + 1.0));
    CHECK(std::abs(reduced - direct) < 1e-4 * std::abs(direct));
}

TEST_CASE("B and D vanish at t = 0 and for zero data") {
    const RunData run0 = solve(1, 3.0, 0.5, 1.0, 0.05, 0.05);
    CHECK(compute_B(run0.trace, run0.grid, 0.0) == 0.0);
    CHECK(compute_D(run0.trace, run0.grid, 3.0, 0.0) == 0.0);
    const RunData zero = solve(1, 3.0, 0.0, 1.0, 0.05, 0.05);
    CHECK(compute_B(zero.trace, zero.grid, 1.0) == 0.0);
    CHECK(compute_D(zero.trace, zero.grid, 3.0, 1.0) == 0.0);
    const DuhamelSample s = check_duhamel(zero.trace, zero.spec, 1.0);
    CHECK(s.residual == 0.0);
    CHECK_THROWS_AS(compute_D(run0.trace, run0.grid, 3.0, 0.525), std::invalid_argument);
}

TEST_CASE("identity holds at t = 0 and converges along a blow-up trajectory") {
    const RunData coarse = solve(1, 3.0, 0.5, 10.0, 0.05, 0.05);
    const DuhamelSample at0 = check_duhamel(coarse.trace, coarse.spec, 0.0);
    CHECK(at0.residual < 1e-14);
    CHECK(at0.G + at0.A == doctest::Approx(at0.free_term).epsilon(1e-14));

    const RunData fine = solve(1, 3.0, 0.5, 10.0, 0.025, 0.025);
    for (double t : {2.0, 5.0, 10.0}) {
        const DuhamelSample a = check_duhamel(coarse.trace, coarse.spec, t);
        const DuhamelSample b = check_duhamel(fine.trace, fine.spec, t);
        CHECK(a.residual < 1e-2);
        CHECK(a.residual / b.residual >= 3.0);
        // the recorded initial snapshot gives the same free term as eps (f + g)
        const FunctionalTrace ft = evaluate_functionals(coarse.trace, coarse.grid, 3.0, {t});
        REQUIRE(ft.duhamel.size() == 1);
        CHECK(ft.duhamel[0].free_term == doctest::Approx(a.free_term).epsilon(1e-13));
        CHECK(ft.duhamel[0].D == a.D);
    }
}

TEST_CASE("inequality chain along a trajectory") {
    const RunData data = solve(1, 3.0, 0.5, 20.0, 0.05, 0.05);
    std::vector<double> times;
    for (int k = 1; k <= 20; ++k) times.push_back(static_cast<double>(k));
    const FunctionalTrace ft = evaluate_functionals(data.trace, data.grid, 3.0, times);
    CHECK(ft.warnings.empty());
    const double c = holder_constant(1, 3.0);
    const double k = moment_bound_constant(1, 3.0);
    for (std::size_t j = 0; j < ft.times.size(); ++j) {
        CHECK(ft.F[j] >= 0.0);
        CHECK(ft.G[j] <= c * ft.F[j] + 1e-9);
        CHECK(ft.moment_term[j] <= k * ft.F[j] / (ft.times[j] + 1.0) + 1e-12);
    }
    REQUIRE(ft.duhamel.size() == times.size());
    for (const auto& s : ft.duhamel) {
        CHECK(s.D >= s.d_lower - s.d_quadrature_error);
        CHECK(s.d_quadrature_error < 1e-2 * s.D + 1e-12);
    }
}

TEST_CASE("A matches dG/dt minus the moment correction") {
    const RunData data = solve(1, 2.0, 0.3, 4.0, 0.02, 0.02);
    // u stays nonnegative here, so the correction equals compute_moment_term
    for (std::size_t j = 1; j + 1 < data.trace.size(); j += 20) {
        const auto& prev = data.trace[j - 1];
        const auto& next = data.trace[j + 1];
        const double dg = (compute_G(next, data.grid) - compute_G(prev, data.grid)) / (next.t - prev.t);
        const double a = compute_A(data.trace[j], data.grid);
        const double corr = compute_moment_term(data.trace[j], data.grid);
        CHECK(std::abs(a - (dg - corr)) < 1e-3 * (1.0 + std::abs(a)));
    }
}

TEST_CASE("coarse snapshots produce a cadence warning") {
    const RunData data = solve(1, 2.0, 0.3, 1.0, 0.05, 0.25);
    const FunctionalTrace ft = evaluate_functionals(data.trace, data.grid, 2.0, {1.0});
    CHECK_FALSE(ft.warnings.empty());
}

TEST_CASE("gamma tilde") {
    std::vector<double> times;
    for (int k = 0; k <= 400; ++k) times.push_back(0.01 * k);
    const std::vector<double> zero(times.size(), 0.0);
    const GammaTilde flat = compute_gamma_tilde(times, zero, 1.0, 0.25, 3.0);
    for (double g : flat.values) CHECK(g == 0.25);

    // constant F: the nested integral has a closed form in the exponential integral
    const double c = 0.8, p = 2.0, eps = 0.1;
    const auto closed = [&](double t, double t0) {
        const auto u = [](double s) {
            const double ei = std::expint(1.0 + s);
            return std::exp(s) * std::log1p(s) - ei / std::numbers::e -
                   ((1.0 + s) * ei - std::exp(1.0 + s)) / std::numbers::e + std::expint(1.0) * s / std::numbers::e;
        };
        return eps + std::exp(-t) * std::pow(c, p) * (u(t) - u(t0));
    };
    double previous_error = 0.0;
    for (double h : {0.02, 0.01}) {
        std::vector<double> ts;
        for (int k = 0; k * h <= 4.0 + 1e-12; ++k) ts.push_back(k * h);
        const std::vector<double> fs(ts.size(), c);
        const GammaTilde g = compute_gamma_tilde(ts, fs, 1.0, eps, p);
        CHECK(g.values.front() == eps);
        CHECK(g.times.front() == 1.0);
        double err = 0.0;
        for (std::size_t k = 0; k < g.times.size(); ++k) {
            err = std::max(err, std::abs(g.values[k] - closed(g.times[k], 1.0)));
            if (k > 0) CHECK(g.values[k] >= g.values[k - 1]);
        }
        CHECK(err < 1e-4);
        if (previous_error > 0.0) CHECK(previous_error / err == doctest::Approx(4.0).epsilon(0.05));
        previous_error = err;
    }

    // t0 between samples is anchored exactly
    const std::vector<double> ramp(times.begin(), times.end());
    const GammaTilde mid = compute_gamma_tilde(times, ramp, 1.005, 0.5, 2.0);
    CHECK(mid.times.front() == 1.005);
    CHECK(mid.values.front() == 0.5);
    CHECK(mid.times[1] == times[101]);
    CHECK_THROWS_AS(compute_gamma_tilde(times, ramp, 5.0, 0.5, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(compute_gamma_tilde(times, ramp, -0.5, 0.5, 2.0), std::invalid_argument);
}

TEST_CASE("exp_weight_ratio") {
    CHECK(exp_weight_ratio(0.0) == 0.0);
    CHECK(exp_weight_ratio(1e-6) == doctest::Approx(1e-6).epsilon(1e-5));
    for (double t : {0.5, 5.0, 50.0}) {
        const double exact =
            (std::expint(1.0 + t) - std::expint(1.0)) / std::numbers::e * (1.0 + t) * std::exp(-t);
        CHECK(exp_weight_ratio(t) == doctest::Approx(exact).epsilon(1e-9));
    }
    CHECK(std::abs(exp_weight_ratio(50.0) - 1.0) < 0.05);
    const RatioSupremum sup = exp_weight_ratio_sup(100.0, 0.01);
    CHECK(std::isfinite(sup.value));
    CHECK(sup.value >= exp_weight_ratio(100.0));
    CHECK(sup.value < 2.0);
}
