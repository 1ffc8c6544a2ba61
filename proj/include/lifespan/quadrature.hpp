#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace lifespan {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule by Newton iteration on P_n.
GaussRule gauss_legendre(std::size_t n);

/// Trapezoid rule on arbitrary (increasing) abscissae.
double trapezoid(std::span<const double> x, std::span<const double> y);

/// Running trapezoid integral: out[k] = integral from x[0] to x[k].
std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y);

/// Error estimate for trapezoid(x, y): |T_h - T_2h| / 3, where T_2h drops every
/// other interior abscissa. Zero for fewer than three samples.
double trapezoid_error_estimate(std::span<const double> x, std::span<const double> y);

struct AdaptiveResult {
    double value;
    double error_estimate;
};

/// Adaptive Simpson quadrature to absolute tolerance tol.
AdaptiveResult adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                                int max_depth = 50);

}  // namespace lifespan
