#include "lifespan/heat_kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "lifespan/quadrature.hpp"

namespace lifespan {

namespace {

void check_dim(int dim) {
    if (dim < 1 || dim > 8) throw std::invalid_argument("heat kernel: dimension must be in [1, 8]");
}

double kernel_prefactor(double t, int dim) { return std::pow(4.0 * std::numbers::pi * t, -0.5 * dim); }

// Gauss-Legendre rules on [0, pi] with 16, 32, ..., 1024 nodes, built once.
// Per node we keep the weight, 1 - cos(theta) = 2 sin^2(theta/2), and sin(theta).
struct AngularRule {
    std::vector<double> weights;
    std::vector<double> one_minus_cos;
    std::vector<double> sin_theta;
};

struct AngularRules {
    static constexpr std::size_t kLevels = 7;
    std::array<AngularRule, kLevels> rules;

    AngularRules() {
        for (std::size_t k = 0; k < kLevels; ++k) {
            const GaussRule g = gauss_legendre(std::size_t{16} << k);
            AngularRule& r = rules[k];
            for (std::size_t i = 0; i < g.nodes.size(); ++i) {
                const double th = 0.5 * std::numbers::pi * (g.nodes[i] + 1.0);
                const double sh = std::sin(0.5 * th);
                r.weights.push_back(0.5 * std::numbers::pi * g.weights[i]);
                r.one_minus_cos.push_back(2.0 * sh * sh);
                r.sin_theta.push_back(std::sin(th));
            }
        }
    }

    // The angular integrand is peaked at theta = 0 with width a^{-1/2}; Gauss
    // nodes cluster quadratically at the ends, so the node count scales as a^{1/4}.
    const AngularRule& for_sharpness(double a) const {
        const double wanted = 16.0 + 32.0 * std::pow(std::max(a, 0.0), 0.25);
        std::size_t k = 0;
        while (k + 1 < kLevels && static_cast<double>(std::size_t{16} << k) < wanted) ++k;
        return rules[k];
    }
};

const AngularRules& angular_rules() {
    static const AngularRules rules;
    return rules;
}

}  // namespace

double truncation_radius(double s) { return 2.0 * std::sqrt(s * std::log(1.0 / kGaussianWeightFloor)); }

double eval_kernel(const KernelPoint& p) {
    check_dim(p.dim);
    if (!(p.t > 0.0)) throw std::invalid_argument("eval_kernel: t must be positive");
    if (p.r < 0.0) throw std::invalid_argument("eval_kernel: r must be nonnegative");
    return kernel_prefactor(p.t, p.dim) * std::exp(-p.r * p.r / (4.0 * p.t));
}

double kernel_time_derivative(double t, double r, int dim) {
    return eval_kernel(t, r, dim) * (r * r / (4.0 * t * t) - 0.5 * dim / t);
}

MassEstimate kernel_mass(double t, int dim, const RadialGrid& grid) {
    check_dim(dim);
    if (!(t > 0.0)) throw std::invalid_argument("kernel_mass: t must be positive");
    if (grid.dim() != dim) throw std::invalid_argument("kernel_mass: grid dimension mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) sum += grid.weight(i) * eval_kernel(t, grid.node(i), dim);
    const double r_max = grid.radius();
    const double tail = gaussian_tail_fraction(dim, r_max * r_max / (4.0 * t));
    return {sum, tail, r_max < truncation_radius(t)};
}

double weighted_moment(const RadialProfile& w, double s, int m) {
    if (!(s > 0.0)) throw std::invalid_argument("weighted_moment: scale must be positive");
    if (m < 0) throw std::invalid_argument("weighted_moment: moment must be nonnegative");
    const RadialGrid& g = w.grid;
    const double inv4s = 1.0 / (4.0 * s);
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = w.values[i];
        if (v == 0.0) continue;
        const double r = g.node(i);
        double rm = 1.0;
        for (int k = 0; k < m; ++k) rm *= r;
        sum += g.weight(i) * std::exp(-r * r * inv4s) * rm * v;
    }
    return sum;
}

double sphere_integrated_kernel(double t, double rho, double r, int dim) {
    check_dim(dim);
    const double pref = kernel_prefactor(t, dim);
    const double inv4t = 1.0 / (4.0 * t);
    const double base = (rho - r) * (rho - r) * inv4t;
    if (dim == 1) {
        return pref * (std::exp(-base) + std::exp(-(rho + r) * (rho + r) * inv4t));
    }
    // |rho e - r sigma|^2 = (rho - r)^2 + 2 rho r (1 - cos theta)
    const double a = rho * r / (2.0 * t);
    const AngularRule& rule = angular_rules().for_sharpness(a);
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.weights.size(); ++k) {
        double jac = rule.weights[k];
        for (int j = 2; j < dim; ++j) jac *= rule.sin_theta[k];
        acc += jac * std::exp(-a * rule.one_minus_cos[k]);
    }
    return pref * std::exp(-base) * unit_sphere_area(dim - 1) * acc;
}

ConvolutionResult convolve_with_kernel(const RadialProfile& w, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("convolve_with_kernel: t must be positive");
    const RadialGrid& g = w.grid;
    const int dim = g.dim();
    const double reach = truncation_radius(t);

    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (w.values[i] != 0.0) support.push_back(i);
    }

    RadialProfile out(g);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double rho = g.node(j);
        double acc = 0.0;
        for (std::size_t i : support) {
            const double r = g.node(i);
            if (std::abs(rho - r) > reach) continue;
            acc += g.radial_weight(i) * w.values[i] * sphere_integrated_kernel(t, rho, r, dim);
        }
        out.values[j] = acc;
    }

    ConvolutionResult result{std::move(out), std::nullopt};
    if (t < g.dr() * g.dr()) {
        result.warning = "convolution time " + std::to_string(t) + " is below dr^2 = " +
                         std::to_string(g.dr() * g.dr()) + "; the kernel is not resolved by the grid";
    }
    return result;
}

double semigroup_residual(double t, double s, int dim, double dr) {
    if (!(t > 0.0) || !(s > 0.0)) throw std::invalid_argument("semigroup_residual: times must be positive");
    const RadialGrid grid = RadialGrid::covering(dim, dr, truncation_radius(t + s));
    const RadialProfile first = RadialProfile::sampled(grid, [&](double r) { return eval_kernel(t, r, dim); });
    const ConvolutionResult conv = convolve_with_kernel(first, s);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        worst = std::max(worst, std::abs(conv.profile.values[i] - eval_kernel(t + s, grid.node(i), dim)));
    }
    return worst;
}

double heat_residual(double t, const RadialGrid& grid, double r_from) {
    const double dt = grid.dr();
    if (!(t > 2.0 * dt)) throw std::invalid_argument("heat_residual: t must exceed twice the grid spacing");
    const int dim = grid.dim();
    std::vector<double> e(grid.size());
    std::vector<double> lap(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) e[i] = eval_kernel(t, grid.node(i), dim);
    radial_laplacian(grid, e, lap);
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double r = grid.node(i);
        if (r < r_from) continue;
        const double et = (eval_kernel(t + dt, r, dim) - eval_kernel(t - dt, r, dim)) / (2.0 * dt);
        worst = std::max(worst, std::abs(et - lap[i]));
    }
    return worst;
}

std::vector<KernelCheck> kernel_validation_suite(int residual_dim, double residual_dr) {
    constexpr double none = -std::numeric_limits<double>::infinity();
    std::vector<KernelCheck> out;
    for (int n = 1; n <= 6; ++n) {
        for (double t : {0.1, 1.0, 10.0}) {
            const RadialGrid grid = RadialGrid::covering(n, 1e-4 * std::sqrt(t), truncation_radius(t));
            const double err = std::abs(kernel_mass(t, n, grid).value - 1.0);
            out.push_back({"mass", n, t, 0.0, err, none, 1e-8, err < 1e-8});
        }
    }
    for (int n : {1, 2, 4}) {
        const double res = semigroup_residual(1.0, 2.0, n);
        out.push_back({"semigroup", n, 1.0, 2.0, res, none, 1e-6, res < 1e-6});
    }
    const double reach = truncation_radius(1.0);
    const double coarse = heat_residual(1.0, RadialGrid::covering(residual_dim, residual_dr, reach));
    const double fine = heat_residual(1.0, RadialGrid::covering(residual_dim, residual_dr / 2.0, reach));
    const double ratio = coarse / fine;
    out.push_back({"residual_ratio", residual_dim, 1.0, 0.0, ratio, 3.5, 4.5, ratio >= 3.5 && ratio <= 4.5});
    return out;
}

}  // namespace lifespan
