#include "lifespan/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lifespan {

GaussRule gauss_legendre(std::size_t n) {
    if (n == 0) throw std::invalid_argument("gauss_legendre: need at least one node");
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            dp = nd * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
    double sum = 0.0;
    for (std::size_t k = 1; k < x.size(); ++k) sum += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
    return sum;
}

std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("cumulative_trapezoid: size mismatch");
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t k = 1; k < x.size(); ++k) {
        out[k] = out[k - 1] + 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
    }
    return out;
}

double trapezoid_error_estimate(std::span<const double> x, std::span<const double> y) {
    if (x.size() < 3) return 0.0;
    const double fine = trapezoid(x, y);
    double coarse = 0.0;
    std::size_t k = 0;
    for (; k + 2 < x.size(); k += 2) coarse += 0.5 * (x[k + 2] - x[k]) * (y[k + 2] + y[k]);
    if (k + 1 < x.size()) coarse += 0.5 * (x[k + 1] - x[k]) * (y[k + 1] + y[k]);
    return std::abs(fine - coarse) / 3.0;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth, double& err) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        err += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err);
}

}  // namespace

AdaptiveResult adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                                int max_depth) {
    if (a == b) return {0.0, 0.0};
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double err = 0.0;
    const double value = simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth, err);
    return {value, err};
}

}  // namespace lifespan
