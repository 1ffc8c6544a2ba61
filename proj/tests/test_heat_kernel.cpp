#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "lifespan/heat_kernel.hpp"
#include "lifespan/quadrature.hpp"

using namespace lifespan;

namespace {

// Distance in units in the last place.
double ulps_apart(double a, double b) {
    return std::abs(a - b) / (std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)));
}

RadialGrid fine_grid_for(double t, int dim) {
    return RadialGrid::covering(dim, 1e-4 * std::sqrt(t), truncation_radius(t));
}

}  // namespace

TEST_CASE("unit sphere areas match the familiar values") {
    CHECK(unit_sphere_area(1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(unit_sphere_area(2) == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-15));
    CHECK(unit_sphere_area(3) == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-15));
    CHECK(unit_sphere_area(4) == doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi).epsilon(1e-15));
    for (int n = 1; n <= 8; ++n) {
        CHECK(half_integer_gamma(n) == doctest::Approx(std::tgamma(0.5 * n)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(unit_sphere_area(0), std::invalid_argument);
    CHECK_THROWS_AS(unit_sphere_area(9), std::invalid_argument);
}

TEST_CASE("gaussian tail fraction agrees with direct quadrature of the radial density") {
    for (int n = 1; n <= 6; ++n) {
        for (double x : {0.3, 1.0, 4.0}) {
            // Q(n/2, x) = int_x^inf s^{n/2-1} e^{-s} ds / Gamma(n/2), computed on [x, x + 60]
            const auto q = adaptive_simpson(
                [&](double s) { return std::pow(s, 0.5 * n - 1.0) * std::exp(-s); }, x, x + 60.0, 1e-13);
            CHECK(gaussian_tail_fraction(n, x) == doctest::Approx(q.value / std::tgamma(0.5 * n)).epsilon(1e-9));
        }
    }
}

TEST_CASE("eval_kernel direct values") {
    CHECK(eval_kernel(1.0, 0.0, 2) == doctest::Approx(1.0 / (4.0 * std::numbers::pi)).epsilon(1e-15));
    CHECK(eval_kernel(1.0, 0.0, 2) == doctest::Approx(0.0795775).epsilon(1e-6));
    CHECK(eval_kernel(0.25, 1.0, 1) == doctest::Approx(std::exp(-1.0) / std::sqrt(std::numbers::pi)).epsilon(1e-15));
    CHECK(eval_kernel(0.25, 1.0, 1) == doctest::Approx(0.2075537).epsilon(1e-6));
    CHECK_THROWS_AS(eval_kernel(0.0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(eval_kernel(-1.0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(eval_kernel(1.0, -0.5, 1), std::invalid_argument);
}

TEST_CASE("eval_kernel is positive, radially nonincreasing and self-similar") {
    for (int n = 1; n <= 8; ++n) {
        for (double t : {0.01, 0.3, 1.0, 7.0, 100.0}) {
            double prev = eval_kernel(t, 0.0, n);
            for (double r = 0.05; r < 2.0 * std::sqrt(t) * 5.0; r += 0.05 * std::sqrt(t)) {
                const double e = eval_kernel(t, r, n);
                CHECK(e > 0.0);
                CHECK(e <= prev);
                prev = e;
                const double scaled = std::pow(t, -0.5 * n) * eval_kernel(1.0, r / std::sqrt(t), n);
                CHECK(e == doctest::Approx(scaled).epsilon(1e-13));
            }
        }
        // With t a power of four the rescaling of r is exact, so only rounding in
        // the prefactor and the exponential remains.
        for (double t : {0.25, 4.0, 16.0}) {
            for (double r : {0.0, 0.1, 0.7, 1.3, 2.9}) {
                const double scaled = std::pow(t, -0.5 * n) * eval_kernel(1.0, r / std::sqrt(t), n);
                CHECK(ulps_apart(eval_kernel(t, r, n), scaled) <= 4.0);
            }
        }
    }
}

TEST_CASE("kernel_time_derivative matches a centred difference") {
    for (int n : {1, 3, 5}) {
        for (double r : {0.0, 0.8, 2.5}) {
            const double h = 1e-5;
            const double fd = (eval_kernel(1.5 + h, r, n) - eval_kernel(1.5 - h, r, n)) / (2.0 * h);
            CHECK(kernel_time_derivative(1.5, r, n) == doctest::Approx(fd).epsilon(1e-8));
        }
    }
}

TEST_CASE("kernel mass is one for resolved grids") {
    for (double t : {0.1, 1.0, 10.0}) {
        for (int n = 1; n <= 6; ++n) {
            const MassEstimate m = kernel_mass(t, n, fine_grid_for(t, n));
            CHECK(std::abs(m.value - 1.0) < 1e-8);
            CHECK_FALSE(m.truncated);
            CHECK(m.truncation_error < 1e-12);
        }
    }
}

TEST_CASE("kernel mass on a truncated grid reports the missing tail") {
    const RadialGrid full = fine_grid_for(1.0, 2);
    const RadialGrid cut = RadialGrid::covering(2, full.dr(), 1.0);
    const MassEstimate truncated = kernel_mass(1.0, 2, cut);
    const MassEstimate untruncated = kernel_mass(1.0, 2, full);
    CHECK(truncated.truncated);
    CHECK(truncated.value < 1.0);
    CHECK(truncated.truncation_error > 0.0);
    // In two dimensions the tail beyond radius 1 is exactly e^{-1/4}.
    CHECK(truncated.truncation_error == doctest::Approx(std::exp(-0.25)).epsilon(1e-14));
    CHECK(truncated.value + truncated.truncation_error == doctest::Approx(untruncated.value).epsilon(1e-7));
}

TEST_CASE("weighted_moment closed forms") {
    for (int n = 1; n <= 6; ++n) {
        for (double s : {0.5, 1.0, 3.0}) {
            const RadialGrid g = RadialGrid::covering(n, 5e-4, truncation_radius(s) + 1.0);
            const auto one = RadialProfile::sampled(g, [](double) { return 1.0; });
            CHECK(weighted_moment(one, s, 0) ==
                  doctest::Approx(std::pow(4.0 * std::numbers::pi * s, 0.5 * n)).epsilon(1e-7));
            const auto gauss = RadialProfile::sampled(g, [&](double r) { return std::exp(-r * r / (4.0 * s)); });
            CHECK(weighted_moment(gauss, s, 0) ==
                  doctest::Approx(std::pow(2.0 * std::numbers::pi * s, 0.5 * n)).epsilon(1e-7));
            // Second moment of the Gaussian weight: 2 n s (4 pi s)^{n/2}
            CHECK(weighted_moment(one, s, 2) ==
                  doctest::Approx(2.0 * n * s * std::pow(4.0 * std::numbers::pi * s, 0.5 * n)).epsilon(1e-7));
            CHECK(weighted_moment(RadialProfile(g), s, 0) == 0.0);
        }
    }
    const RadialGrid g = RadialGrid::covering(1, 0.01, 20.0);
    const auto one = RadialProfile::sampled(g, [](double) { return 1.0; });
    CHECK(weighted_moment(one, 1.0, 0) == doctest::Approx(3.5449077).epsilon(1e-7));
    CHECK_THROWS_AS(weighted_moment(one, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_moment(one, 1.0, -1), std::invalid_argument);
}

TEST_CASE("weighted_moment is linear in the profile") {
    const RadialGrid g = RadialGrid::covering(3, 0.01, 6.0);
    const auto a = RadialProfile::sampled(g, [](double r) { return std::cos(r) * std::exp(-r); });
    const auto b = RadialProfile::sampled(g, [](double r) { return r < 1.0 ? 1.0 - r : 0.0; });
    const auto mix = RadialProfile::sampled(g, [](double r) {
        return 2.0 * std::cos(r) * std::exp(-r) - 3.0 * (r < 1.0 ? 1.0 - r : 0.0);
    });
    for (int m : {0, 1, 2}) {
        const double expect = 2.0 * weighted_moment(a, 1.7, m) - 3.0 * weighted_moment(b, 1.7, m);
        CHECK(weighted_moment(mix, 1.7, m) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("angular quadrature matches closed forms in two and three dimensions") {
    const double t = 0.7;
    for (double rho : {0.0, 0.3, 2.0, 9.0}) {
        for (double r : {0.0, 0.5, 3.0, 9.5}) {
            const double pref = std::pow(4.0 * std::numbers::pi * t, -1.5);
            const double base = std::exp(-(rho - r) * (rho - r) / (4.0 * t));
            const double a = rho * r / (2.0 * t);
            // int_0^pi e^{-a(1-cos)} sin = (1 - e^{-2a}) / a
            const double ang3 = a == 0.0 ? 2.0 : -std::expm1(-2.0 * a) / a;
            const double exact3 = pref * base * 2.0 * std::numbers::pi * ang3;
            CHECK(sphere_integrated_kernel(t, rho, r, 3) == doctest::Approx(exact3).epsilon(1e-12));
            // int_0^pi e^{-a(1-cos)} = pi e^{-a} I_0(a)
            const double pref2 = 1.0 / (4.0 * std::numbers::pi * t);
            const double exact2 =
                pref2 * base * 2.0 * std::numbers::pi * std::exp(-a) * std::cyl_bessel_i(0.0, a);
            CHECK(sphere_integrated_kernel(t, rho, r, 2) == doctest::Approx(exact2).epsilon(1e-12));
        }
    }
}

TEST_CASE("convolution of zero is zero") {
    const RadialGrid g = RadialGrid::covering(4, 0.1, 5.0);
    const auto conv = convolve_with_kernel(RadialProfile(g), 1.0);
    for (double v : conv.profile.values) CHECK(v == 0.0);
}

TEST_CASE("convolution with a narrow unit-mass bump approximates the kernel") {
    for (int n : {1, 3}) {
        const double width = 0.05;
        const RadialGrid g = RadialGrid::covering(n, 0.005, truncation_radius(1.0));
        auto bump = RadialProfile::sampled(g, [&](double r) {
            const double x = r / width;
            return x < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
        });
        const double mass = weighted_moment(bump, 1e12, 0);
        for (double& v : bump.values) v /= mass;
        const auto conv = convolve_with_kernel(bump, 1.0);
        CHECK_FALSE(conv.warning.has_value());
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            worst = std::max(worst, std::abs(conv.profile.values[i] - eval_kernel(1.0, g.node(i), n)));
        }
        // A bump of radius 0.05 shifts the kernel by roughly its second moment,
        // about 1e-3 * |d_t E| <= 1e-3.
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("convolution warns when the kernel is below grid resolution") {
    const RadialGrid g = RadialGrid::covering(2, 0.1, 3.0);
    const auto one = RadialProfile::sampled(g, [](double r) { return r < 1.0 ? 1.0 : 0.0; });
    CHECK(convolve_with_kernel(one, 1e-3).warning.has_value());
    CHECK_FALSE(convolve_with_kernel(one, 0.5).warning.has_value());
}

TEST_CASE("semigroup property of the kernel") {
    CHECK(semigroup_residual(1.0, 2.0, 1) < 1e-6);
    CHECK(semigroup_residual(1.0, 2.0, 4) < 1e-6);
    CHECK(semigroup_residual(1.0, 2.0, 2) < 1e-6);
}

TEST_CASE("semigroup residual shrinks under refinement") {
    // Two dimensions: the trapezoid error in the source radius is O(dr^2).
    const double coarse = semigroup_residual(1.0, 2.0, 2, 0.2);
    const double fine = semigroup_residual(1.0, 2.0, 2, 0.1);
    CHECK(coarse / fine >= 3.0);
}

TEST_CASE("heat residual converges at second order") {
    const double dr = 0.1;
    const double coarse = heat_residual(1.0, RadialGrid::covering(3, dr, truncation_radius(1.0)));
    const double fine = heat_residual(1.0, RadialGrid::covering(3, dr / 2, truncation_radius(1.0)));
    CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.1));
    CHECK(heat_residual(1.0, RadialGrid::covering(1, 0.01, truncation_radius(1.0))) < 1e-4);
}

TEST_CASE("heat residual vanishes beyond the truncation radius") {
    const double reach = truncation_radius(1.0);
    const RadialGrid g = RadialGrid::covering(2, 0.05, reach + 5.0);
    CHECK(heat_residual(1.0, g, reach + 0.1) < 1e-15);
    CHECK_THROWS_AS(heat_residual(0.05, g), std::invalid_argument);
}

TEST_CASE("validation suite passes on the default configuration") {
    const auto checks = kernel_validation_suite();
    CHECK(checks.size() == 22);
    for (const auto& c : checks) {
        INFO(c.name << " dim=" << c.dim << " t=" << c.t << " value=" << c.value);
        CHECK(c.passed);
    }
    CHECK(checks.back().name == "residual_ratio");
    CHECK_THROWS_AS(kernel_validation_suite(3, 1.0), std::invalid_argument);
}
