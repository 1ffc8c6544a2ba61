#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lifespan/radial_grid.hpp"

namespace lifespan {

/// Weight floor used for truncating Gaussian integrals.
inline constexpr double kGaussianWeightFloor = 1e-16;

/// Radius beyond which e^{-r^2/4s} drops below kGaussianWeightFloor.
double truncation_radius(double s);

struct KernelPoint {
    double t;
    double r;
    int dim;
};

/// Heat kernel E(t, x) = (4 pi t)^{-n/2} exp(-|x|^2 / 4t) at |x| = r.
double eval_kernel(const KernelPoint& p);
inline double eval_kernel(double t, double r, int dim) { return eval_kernel(KernelPoint{t, r, dim}); }

/// Partial derivative of E in its time argument, E (|x|^2/(4t^2) - n/(2t)).
double kernel_time_derivative(double t, double r, int dim);

struct MassEstimate {
    double value;
    /// Analytic mass of E(t, .) outside the grid radius.
    double truncation_error;
    bool truncated;
};

/// Trapezoid quadrature of E(t, .) over R^n, reduced to the radial grid.
MassEstimate kernel_mass(double t, int dim, const RadialGrid& grid);

/// Integral over R^n of exp(-|x|^2 / 4s) |x|^m w(|x|).
double weighted_moment(const RadialProfile& w, double s, int m);

struct ConvolutionResult {
    RadialProfile profile;
    std::optional<std::string> warning;
};

/// (E(t) * w) for a radial profile w, sampled on the same grid. Each output
/// value is a radius x polar-angle quadrature of the full convolution integral:
/// trapezoid in the source radius, Gauss-Legendre in the angle with the
/// sin^{n-2} Jacobian. In one dimension the angular integral is the two-point
/// sum over +-r.
ConvolutionResult convolve_with_kernel(const RadialProfile& w, double t);

/// Angular part of the radial convolution:
///   integral over S^{n-1} of E(t, |rho e - r sigma|) d sigma.
/// Exposed for testing against closed forms.
double sphere_integrated_kernel(double t, double rho, double r, int dim);

/// Max-norm distance between E(t) * E(s) computed by convolve_with_kernel and
/// E(t + s), on a grid of spacing dr covering the truncation radius of t + s.
double semigroup_residual(double t, double s, int dim, double dr = 0.02);

/// Max norm of the finite-difference residual E_t - Delta_h E over the grid
/// nodes with r >= r_from (last node excluded). E_t is a centred difference
/// with time step dr; Delta_h is the radial Laplacian used by the wave solver.
double heat_residual(double t, const RadialGrid& grid, double r_from = 0.0);

struct KernelCheck {
    std::string name;  // "mass", "semigroup" or "residual_ratio"
    int dim;
    double t;
    double s;  // second time of the semigroup pair, 0 otherwise
    double value;
    double lower;
    double upper;
    bool passed;
};

/// Kernel validation suite: |mass - 1| at t in {0.1, 1, 10} for n = 1..6,
/// semigroup residual at (1, 2) for n in {1, 2, 4}, and the heat residual
/// ratio between spacings residual_dr and residual_dr / 2 at t = 1.
std::vector<KernelCheck> kernel_validation_suite(int residual_dim = 3, double residual_dr = 0.1);

}  // namespace lifespan
