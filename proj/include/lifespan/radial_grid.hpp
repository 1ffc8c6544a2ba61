#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace lifespan {

/// Surface area of the unit sphere S^{n-1} in R^n, 2 pi^{n/2} / Gamma(n/2).
/// Closed forms for 1 <= n <= 8; throws std::invalid_argument otherwise.
double unit_sphere_area(int dim);

/// Gamma(k / 2) for a positive integer k, via the integer and half-integer
/// closed forms.
double half_integer_gamma(int twice_arg);

/// Regularized upper incomplete gamma Q(n/2, x). This is the mass fraction of a
/// centred Gaussian in R^n lying outside the ball of radius 2 sqrt(t x).
double gaussian_tail_fraction(int dim, double x);

/// Uniform radial grid r_i = i * dr, i = 0 .. count-1, for radial functions on
/// R^n. Quadrature weights are the composite trapezoid weights multiplied by
/// the surface measure |S^{n-1}| r^{n-1}, so that sum_i weight(i) w(r_i)
/// approximates the integral of w(|x|) over the ball of radius r_max.
///
/// Cheap to copy: weights are shared and immutable.
class RadialGrid {
public:
    RadialGrid(int dim, double dr, std::size_t count);

    /// Smallest grid with spacing dr whose last node is at or beyond r_max.
    static RadialGrid covering(int dim, double dr, double r_max);

    int dim() const { return dim_; }
    double dr() const { return dr_; }
    std::size_t size() const { return count_; }
    double node(std::size_t i) const { return static_cast<double>(i) * dr_; }
    double radius() const { return node(count_ - 1); }

    std::span<const double> weights() const { return *weights_; }
    double weight(std::size_t i) const { return (*weights_)[i]; }

    /// Weight without the sphere area: r^{n-1} dr with trapezoid end factors.
    double radial_weight(std::size_t i) const { return (*weights_)[i] / sphere_area_; }
    double sphere_area() const { return sphere_area_; }

    /// Same spacing and dimension, different node count.
    RadialGrid resized(std::size_t count) const { return RadialGrid(dim_, dr_, count); }

    bool operator==(const RadialGrid& other) const {
        return dim_ == other.dim_ && dr_ == other.dr_ && count_ == other.count_;
    }

private:
    int dim_;
    double dr_;
    std::size_t count_;
    double sphere_area_;
    std::shared_ptr<const std::vector<double>> weights_;
};

/// Samples of a radial function on a grid.
struct RadialProfile {
    RadialGrid grid;
    std::vector<double> values;

    explicit RadialProfile(RadialGrid g) : grid(std::move(g)), values(grid.size(), 0.0) {}
    RadialProfile(RadialGrid g, std::vector<double> v);

    template <class Fn>
    static RadialProfile sampled(const RadialGrid& g, Fn&& fn) {
        RadialProfile out(g);
        for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = fn(g.node(i));
        return out;
    }
};

/// Discrete radial Laplacian u_rr + (n-1)/r u_r with centred differences.
/// At the origin the symmetric expansion gives 2n (u_1 - u_0) / dr^2. The last
/// node is left at zero: callers impose a homogeneous value there.
void radial_laplacian(const RadialGrid& grid, std::span<const double> u, std::span<double> out);

}  // namespace lifespan
