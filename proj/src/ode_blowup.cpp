#include "lifespan/ode_blowup.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "lifespan/text_format.hpp"

namespace lifespan {

namespace {

using State = std::array<double, 2>;  // I, I'

struct Rhs {
    const OdeParams& params;
    bool first_order;

    State operator()(double t, const State& y) const {
        const double source = params.C0 * std::pow(std::max(y[0], 0.0), 1.0 + params.alpha) /
                              std::pow(1.0 + t, params.beta);
        if (first_order) return {source, 0.0};
        return {y[1], source - y[1]};
    }
};

State axpy(const State& y, double h, const State& k) { return {y[0] + h * k[0], y[1] + h * k[1]}; }

State rk4(const Rhs& f, double t, const State& y, double h) {
    const State k1 = f(t, y);
    const State k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
    const State k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
    const State k4 = f(t + h, axpy(y, h, k3));
    return {y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
}

struct RootFit {
    double root;
    double residual;
    bool ok;
};

// Least-squares line through (t_k, y_k); returns where it crosses zero.
RootFit fit_root(const std::deque<std::pair<double, double>>& pts) {
    const double m = static_cast<double>(pts.size());
    double tm = 0.0, ym = 0.0;
    for (const auto& [t, y] : pts) {
        tm += t;
        ym += y;
    }
    tm /= m;
    ym /= m;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (const auto& [t, y] : pts) {
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (y - ym);
        syy += y * y;
    }
    if (!(stt > 0.0)) return {0.0, 0.0, false};
    const double slope = sty / stt;
    if (!(slope < 0.0)) return {0.0, 0.0, false};
    double ss = 0.0;
    for (const auto& [t, y] : pts) {
        const double e = y - (ym + slope * (t - tm));
        ss += e * e;
    }
    return {tm - ym / slope, syy > 0.0 ? std::sqrt(ss / syy) : 0.0, true};
}

}  // namespace

void OdeParams::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("OdeParams: alpha must be positive");
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("OdeParams: beta must lie in [0, 1]");
    if (!(C0 > 0.0) || !std::isfinite(C0)) throw std::invalid_argument("OdeParams: C0 must be positive");
    if (!(I0 > 0.0) || !std::isfinite(I0)) throw std::invalid_argument("OdeParams: I0 must be positive");
    if (!(I0_prime >= 0.0) || !std::isfinite(I0_prime)) {
        throw std::invalid_argument("OdeParams: I0_prime must be nonnegative");
    }
}

std::string_view ode_status_name(OdeStatus status) {
    switch (status) {
        case OdeStatus::BlewUp: return "BlewUp";
        case OdeStatus::HorizonReached: return "HorizonReached";
        case OdeStatus::StepUnderflow: return "StepUnderflow";
    }
    return "unknown";
}

OdeResult integrate(const OdeParams& params, const OdeOptions& options) {
    params.validate();
    if (!(options.tol > 0.0)) throw std::invalid_argument("integrate: tol must be positive");
    if (!(options.horizon > 0.0)) throw std::invalid_argument("integrate: horizon must be positive");
    if (options.window < 3) throw std::invalid_argument("integrate: extrapolation window must hold 3 points");

    const Rhs rhs{params, options.first_order};
    const double rate_power = options.first_order ? params.alpha : 0.5 * params.alpha;

    OdeResult result;
    result.tolerance_report.tol = options.tol;
    double t = 0.0;
    State y{params.I0, params.I0_prime};
    if (options.first_order) y[1] = rhs(0.0, y)[0];
    double h = 1e-3;
    std::deque<std::pair<double, double>> tail;
    if (options.keep_samples) result.samples.push_back({t, y[0], y[1]});

    while (true) {
        if (y[0] > options.blowup_threshold) {
            const RootFit fit = fit_root(tail);
            result.status = OdeStatus::BlewUp;
            result.T = fit.ok ? std::max(fit.root, t) : t;
            result.tolerance_report.fit_residual = fit.residual;
            break;
        }
        if (t >= options.horizon) {
            result.status = OdeStatus::HorizonReached;
            break;
        }
        if (h < options.min_step || t + h == t) {
            result.status = OdeStatus::StepUnderflow;
            break;
        }
        const double step = std::min(h, options.horizon - t);
        const State full = rk4(rhs, t, y, step);
        const State half = rk4(rhs, t + 0.5 * step, rk4(rhs, t, y, 0.5 * step), 0.5 * step);
        double err = 0.0;
        for (std::size_t k = 0; k < 2; ++k) {
            const double scale = options.tol * (1.0 + std::abs(half[k]));
            err = std::max(err, std::abs(half[k] - full[k]) / 15.0 / scale);
        }
        if (!std::isfinite(err)) {
            h = 0.25 * step;
            ++result.tolerance_report.rejected;
            continue;
        }
        if (err > 1.0) {
            h = step * std::max(0.1, 0.9 * std::pow(err, -0.2));
            ++result.tolerance_report.rejected;
            continue;
        }
        result.tolerance_report.max_scaled_error = std::max(result.tolerance_report.max_scaled_error, err);
        t += step;
        for (std::size_t k = 0; k < 2; ++k) y[k] = half[k] + (half[k] - full[k]) / 15.0;
        if (options.first_order) y[1] = rhs(t, y)[0];
        ++result.steps;
        tail.emplace_back(t, std::pow(y[0], -rate_power));
        if (tail.size() > options.window) tail.pop_front();
        if (options.keep_samples) result.samples.push_back({t, y[0], y[1]});
        h = step * std::min(4.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
    }
    result.last_time = t;
    result.last_value = y[0];
    return result;
}

double first_order_reference(const OdeParams& params) {
    params.validate();
    const double x = std::pow(params.I0, -params.alpha) / (params.alpha * params.C0);
    if (params.beta == 1.0) return std::expm1(x);
    const double b = 1.0 - params.beta;
    return std::pow(b * x + 1.0, 1.0 / b) - 1.0;
}

std::vector<LifespanRecord> sweep(const OdeParams& base, const std::vector<double>& epsilons,
                                  const OdeOptions& options) {
    std::vector<double> eps = epsilons;
    for (double e : eps) {
        if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument("sweep: epsilon values must be positive");
    }
    std::sort(eps.begin(), eps.end(), std::greater<>());
    const double implied_dim = 2.0 / base.alpha;
    const int dim = std::abs(implied_dim - std::round(implied_dim)) < 1e-9 ? static_cast<int>(std::round(implied_dim)) : 0;

    std::vector<LifespanRecord> out;
    out.reserve(eps.size());
    for (double e : eps) {
        OdeParams params = base;
        params.I0 = e;
        const OdeResult r = integrate(params, options);
        LifespanRecord rec;
        rec.epsilon = e;
        rec.T = r.T;
        rec.status = std::string(ode_status_name(r.status));
        rec.source = RecordSource::ode;
        rec.dim = dim;
        rec.p = 1.0 + base.alpha;
        rec.steps = r.steps;
        rec.note = "alpha=" + format_double(base.alpha) + " beta=" + format_double(base.beta) +
                   " C0=" + format_double(base.C0) + (options.first_order ? " first-order" : "");
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace lifespan
