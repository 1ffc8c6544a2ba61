#include "lifespan/radial_grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lifespan {

double half_integer_gamma(int twice_arg) {
    if (twice_arg <= 0) throw std::invalid_argument("half_integer_gamma: argument must be positive");
    if (twice_arg % 2 == 0) {
        double g = 1.0;  // (k-1)!
        for (int j = 2; j < twice_arg / 2; ++j) g *= j;
        return g;
    }
    // Gamma(k + 1/2) = (k - 1/2)(k - 3/2) ... (1/2) sqrt(pi)
    double g = std::sqrt(std::numbers::pi);
    for (int j = 1; j < twice_arg; j += 2) g *= 0.5 * j;
    return g;
}

double unit_sphere_area(int dim) {
    if (dim < 1 || dim > 8) {
        throw std::invalid_argument("unit_sphere_area: dimension must be in [1, 8], got " +
                                    std::to_string(dim));
    }
    return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / half_integer_gamma(dim);
}

double gaussian_tail_fraction(int dim, double x) {
    if (x <= 0.0) return 1.0;
    if (dim % 2 == 0) {
        // Q(k, x) = e^{-x} sum_{j<k} x^j / j!
        double term = 1.0;
        double sum = 1.0;
        for (int j = 1; j < dim / 2; ++j) {
            term *= x / j;
            sum += term;
        }
        return std::exp(-x) * sum;
    }
    // Q(a + 1, x) = Q(a, x) + x^a e^{-x} / Gamma(a + 1), starting from Q(1/2, x) = erfc(sqrt x)
    double q = std::erfc(std::sqrt(x));
    double a = 0.5;
    for (int j = 1; j < (dim + 1) / 2; ++j) {
        q += std::exp(a * std::log(x) - x - std::lgamma(a + 1.0));
        a += 1.0;
    }
    return q;
}

RadialGrid::RadialGrid(int dim, double dr, std::size_t count)
    : dim_(dim), dr_(dr), count_(count), sphere_area_(unit_sphere_area(dim)) {
    if (!(dr > 0.0) || !std::isfinite(dr)) throw std::invalid_argument("RadialGrid: dr must be positive");
    if (count < 2) throw std::invalid_argument("RadialGrid: need at least two nodes");
    auto w = std::make_shared<std::vector<double>>(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double r = node(i);
        double rp = 1.0;
        for (int k = 1; k < dim; ++k) rp *= r;
        const double end = (i == 0 || i + 1 == count) ? 0.5 : 1.0;
        (*w)[i] = sphere_area_ * rp * dr * end;
    }
    weights_ = std::move(w);
}

RadialGrid RadialGrid::covering(int dim, double dr, double r_max) {
    if (!(dr > 0.0)) throw std::invalid_argument("RadialGrid: dr must be positive");
    // Tolerate r_max / dr landing a hair above an integer.
    const auto intervals = static_cast<std::size_t>(std::ceil(r_max / dr - 1e-9));
    return RadialGrid(dim, dr, std::max<std::size_t>(intervals, 1) + 1);
}

RadialProfile::RadialProfile(RadialGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size()) {
        throw std::invalid_argument("RadialProfile: " + std::to_string(values.size()) +
                                    " samples for a grid of " + std::to_string(grid.size()) + " nodes");
    }
    for (double x : values) {
        if (!std::isfinite(x)) throw std::invalid_argument("RadialProfile: non-finite sample");
    }
}

void radial_laplacian(const RadialGrid& grid, std::span<const double> u, std::span<double> out) {
    const std::size_t n = grid.size();
    const double h = grid.dr();
    const double inv_h2 = 1.0 / (h * h);
    const double dim_m1 = grid.dim() - 1;
    out[0] = 2.0 * grid.dim() * (u[1] - u[0]) * inv_h2;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double urr = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
        const double ur = (u[i + 1] - u[i - 1]) / (2.0 * h);
        out[i] = urr + dim_m1 / (static_cast<double>(i) * h) * ur;
    }
    out[n - 1] = 0.0;
}

}  // namespace lifespan
