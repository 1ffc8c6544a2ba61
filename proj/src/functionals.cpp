#include "lifespan/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lifespan/heat_kernel.hpp"
#include "lifespan/quadrature.hpp"
#include "lifespan/text_format.hpp"

namespace lifespan {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// Visits node i < len with weight w_i e^{-r_i^2/4s}. The Gaussian factor is
// built by the recurrence e^{-(i+1)^2 a} = e^{-i^2 a} e^{-(2i+1) a}, and the
// sweep stops at the truncation radius of s.
template <class Body>
void gaussian_sweep(const RadialGrid& grid, std::size_t len, double s, Body&& body) {
    const double dr = grid.dr();
    const double a = dr * dr / (4.0 * s);
    const double ratio_step = std::exp(-2.0 * a);
    const auto reach = static_cast<std::size_t>(truncation_radius(s) / dr) + 1;
    const std::size_t limit = std::min({len, grid.size(), reach});
    double gauss = 1.0;
    double ratio = std::exp(-a);
    for (std::size_t i = 0; i < limit; ++i) {
        body(i, grid.weight(i) * gauss);
        gauss *= ratio;
        ratio *= ratio_step;
    }
}

double moment(const RadialGrid& grid, const std::vector<double>& values, double s) {
    double acc = 0.0;
    gaussian_sweep(grid, values.size(), s, [&](std::size_t i, double w) { acc += w * values[i]; });
    return acc;
}

double abs_pow_moment(const RadialGrid& grid, const std::vector<double>& u, double s, double p) {
    double acc = 0.0;
    gaussian_sweep(grid, u.size(), s, [&](std::size_t i, double w) {
        if (u[i] != 0.0) acc += w * std::pow(std::abs(u[i]), p);
    });
    return acc;
}

void check_snapshot(const SolutionSnapshot& snap, const RadialGrid& grid) {
    if (snap.u.size() > grid.size() || snap.v.size() > grid.size()) {
        throw std::invalid_argument("functionals: snapshot is longer than the grid");
    }
    if (!(snap.t >= 0.0)) throw std::invalid_argument("functionals: snapshot time must be nonnegative");
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

// F^p / (1 + t) from the weighted |u|^p integral at scale t + 1.
double f_pow_over(double weighted, double t, int dim, double p) {
    return weighted * std::pow(t + 1.0, 0.5 * dim * (p - 1.0) - 1.0);
}

}  // namespace

double compute_G(const SolutionSnapshot& snap, const RadialGrid& grid) {
    check_snapshot(snap, grid);
    return moment(grid, snap.u, snap.t + 1.0);
}

double compute_A(const SolutionSnapshot& snap, const RadialGrid& grid) {
    check_snapshot(snap, grid);
    return moment(grid, snap.v, snap.t + 1.0);
}

double compute_F(const SolutionSnapshot& snap, const RadialGrid& grid, double p) {
    check_snapshot(snap, grid);
    if (!(p > 1.0)) throw std::invalid_argument("compute_F: p must exceed 1");
    const double s = snap.t + 1.0;
    const double w = abs_pow_moment(grid, snap.u, s, p);
    return std::pow(w, 1.0 / p) * std::pow(s, 0.5 * grid.dim() * (p - 1.0) / p);
}

double compute_moment_term(const SolutionSnapshot& snap, const RadialGrid& grid) {
    check_snapshot(snap, grid);
    const double s = snap.t + 1.0;
    double acc = 0.0;
    gaussian_sweep(grid, snap.u.size(), s, [&](std::size_t i, double w) {
        const double r = grid.node(i);
        acc += w * r * r * std::abs(snap.u[i]);
    });
    return acc / (4.0 * s * s);
}

double holder_constant(int dim, double p) { return std::pow(kFourPi, 0.5 * dim * (p - 1.0) / p); }

double moment_bound_constant(int dim, double p) {
    const double conj = p / (p - 1.0);
    const double gaussian = 0.5 * unit_sphere_area(dim) * std::tgamma(conj + 0.5 * dim);
    return std::pow(4.0, 0.5 * dim * (p - 1.0) / p) * std::pow(gaussian, (p - 1.0) / p);
}

DuhamelAccumulator::DuhamelAccumulator(RadialGrid grid, double p, std::vector<double> eval_times,
                                       std::optional<std::vector<double>> initial_sum)
    : grid_(std::move(grid)), p_(p), initial_sum_(std::move(initial_sum)) {
    if (!(p > 1.0)) throw std::invalid_argument("DuhamelAccumulator: p must exceed 1");
    std::sort(eval_times.begin(), eval_times.end());
    eval_times.erase(std::unique(eval_times.begin(), eval_times.end()), eval_times.end());
    for (double t : eval_times) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("DuhamelAccumulator: bad evaluation time");
        Pending pend;
        pend.t = t;
        pending_.push_back(pend);
    }
}

void DuhamelAccumulator::consume(const SolutionSnapshot& snap) {
    check_snapshot(snap, grid_);
    const double tau = snap.t;
    const int dim = grid_.dim();
    if (count_ == 0) {
        if (tau != 0.0) throw std::invalid_argument("DuhamelAccumulator: the first snapshot must be at t = 0");
        if (!initial_sum_) {
            std::vector<double> sum(std::max(snap.u.size(), snap.v.size()), 0.0);
            for (std::size_t i = 0; i < snap.u.size(); ++i) sum[i] += snap.u[i];
            for (std::size_t i = 0; i < snap.v.size(); ++i) sum[i] += snap.v[i];
            initial_sum_ = std::move(sum);
        }
    } else {
        if (!(tau > prev_t_)) throw std::invalid_argument("DuhamelAccumulator: snapshots must advance in time");
        if (tau - prev_t_ > kMaxFunctionalCadence * (1.0 + 1e-9) && warnings_.empty()) {
            warnings_.push_back("snapshot spacing " + format_double(tau - prev_t_) + " at t = " + format_double(tau) +
                                " exceeds " + format_double(kMaxFunctionalCadence) +
                                "; time integrals may be inaccurate");
        }
    }

    abs_pow_.assign(snap.u.size(), 0.0);
    for (std::size_t i = 0; i < snap.u.size(); ++i) {
        if (snap.u[i] != 0.0) abs_pow_[i] = std::pow(std::abs(snap.u[i]), p_);
    }

    double own = 0.0;
    gaussian_sweep(grid_, abs_pow_.size(), tau + 1.0, [&](std::size_t i, double w) { own += w * abs_pow_[i]; });
    const double h = f_pow_over(own, tau, dim, p_);
    if (count_ > 0) lower_ += 0.5 * (tau - prev_t_) * (lower_prev_ + h);
    lower_prev_ = h;

    const bool even = count_ % 2 == 0;
    for (std::size_t j = next_done_; j < pending_.size(); ++j) {
        Pending& pend = pending_[j];
        const double s = 2.0 * pend.t + 1.0 - tau;
        const double scale = std::pow((pend.t + 1.0) / s, 0.5 * dim);
        double up = 0.0, v0 = 0.0, v2 = 0.0;
        gaussian_sweep(grid_, std::max(abs_pow_.size(), snap.v.size()), s, [&](std::size_t i, double w) {
            if (i < abs_pow_.size()) up += w * abs_pow_[i];
            if (i < snap.v.size()) {
                const double r = grid_.node(i);
                const double wv = w * snap.v[i];
                v0 += wv;
                v2 += wv * r * r;
            }
        });
        const double d_now = scale * up;
        const double b_now = scale * (v2 / (4.0 * s * s) - 0.5 * dim / s * v0);
        if (count_ > 0) {
            const double half = 0.5 * (tau - prev_t_);
            pend.d_fine += half * (pend.d_prev + d_now);
            pend.b_fine += half * (pend.b_prev + b_now);
        }
        if (even) {
            if (count_ > 0) pend.d_coarse += 0.5 * (tau - prev_even_t_) * (pend.d_even + d_now);
            pend.d_even = d_now;
        }
        pend.d_prev = d_now;
        pend.b_prev = b_now;
    }

    // Retire evaluation times reached (or skipped) by this snapshot.
    while (next_done_ < pending_.size() && pending_[next_done_].t <= tau + 1e-9 * std::max(1.0, tau)) {
        Pending& pend = pending_[next_done_];
        if (same_time(tau, pend.t)) {
            finish(pend, snap);
        } else {
            warnings_.push_back("no snapshot at evaluation time " + format_double(pend.t));
        }
        ++next_done_;
    }

    if (even) prev_even_t_ = tau;
    prev_t_ = tau;
    ++count_;
}

void DuhamelAccumulator::finish(const Pending& pend, const SolutionSnapshot& snap) {
    const int dim = grid_.dim();
    const double t = snap.t;
    DuhamelSample out;
    out.t = t;
    out.G = moment(grid_, snap.u, t + 1.0);
    out.A = moment(grid_, snap.v, t + 1.0);
    out.B = pend.b_fine;
    out.D = pend.d_fine;
    out.free_term = std::pow((t + 1.0) / (2.0 * t + 1.0), 0.5 * dim) * moment(grid_, *initial_sum_, 2.0 * t + 1.0);
    const double rhs = out.free_term + out.D;
    out.residual = std::abs(out.G + out.A + out.B - rhs) / (1.0 + std::abs(rhs));
    out.d_lower = std::pow(2.0, -0.5 * dim) * lower_;
    // coarse rule on even-index samples, closed by the last fine panel when needed
    double d_coarse = pend.d_coarse;
    if (count_ % 2 == 1) d_coarse += 0.5 * (t - prev_t_) * (pend.d_even + pend.d_prev);
    out.d_quadrature_error = count_ >= 2 ? std::abs(out.D - d_coarse) / 3.0 : 0.0;
    done_.push_back(out);
}

FunctionalRecorder::FunctionalRecorder(RadialGrid grid, double p, std::vector<double> duhamel_times)
    : grid_(grid), duhamel_(std::move(grid), p, std::move(duhamel_times)) {
    trace_.dim = grid_.dim();
    trace_.p = p;
}

void FunctionalRecorder::consume(const SolutionSnapshot& snap) {
    duhamel_.consume(snap);
    trace_.times.push_back(snap.t);
    trace_.G.push_back(compute_G(snap, grid_));
    trace_.F.push_back(compute_F(snap, grid_, trace_.p));
    trace_.A.push_back(compute_A(snap, grid_));
    trace_.moment_term.push_back(compute_moment_term(snap, grid_));
}

FunctionalTrace FunctionalRecorder::finish() const {
    FunctionalTrace out = trace_;
    out.duhamel = duhamel_.samples();
    out.warnings = duhamel_.warnings();
    return out;
}

FunctionalTrace evaluate_functionals(const std::vector<SolutionSnapshot>& trace, const RadialGrid& grid, double p,
                                     const std::vector<double>& duhamel_times) {
    FunctionalRecorder rec(grid, p, duhamel_times);
    for (const auto& snap : trace) rec.consume(snap);
    return rec.finish();
}

namespace {

DuhamelSample single_time(const std::vector<SolutionSnapshot>& trace, const RadialGrid& grid, double p, double t,
                          std::optional<std::vector<double>> initial_sum) {
    DuhamelAccumulator acc(grid, p, {t}, std::move(initial_sum));
    for (const auto& snap : trace) {
        if (snap.t > t + 1e-9 * std::max(1.0, t)) break;
        acc.consume(snap);
    }
    if (acc.samples().empty()) {
        throw std::invalid_argument("functionals: time " + format_double(t) + " is not a snapshot time of the trace");
    }
    return acc.samples().front();
}

}  // namespace

double compute_D(const std::vector<SolutionSnapshot>& trace, const RadialGrid& grid, double p, double t) {
    return single_time(trace, grid, p, t, std::nullopt).D;
}

double compute_B(const std::vector<SolutionSnapshot>& trace, const RadialGrid& grid, double t) {
    // B does not involve the power; any admissible p gives the same value
    return single_time(trace, grid, 2.0, t, std::nullopt).B;
}

DuhamelSample check_duhamel(const std::vector<SolutionSnapshot>& trace, const ProblemSpec& spec, double t) {
    const RadialGrid& grid = spec.f.grid;
    std::vector<double> sum(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) sum[i] = spec.epsilon * (spec.f.values[i] + spec.g.values[i]);
    return single_time(trace, grid, spec.p, t, std::move(sum));
}

GammaTilde compute_gamma_tilde(const std::vector<double>& times, const std::vector<double>& F, double t0,
                               double epsilon, double p) {
    if (times.size() != F.size()) throw std::invalid_argument("compute_gamma_tilde: times and F differ in length");
    if (times.empty() || times.front() != 0.0) {
        throw std::invalid_argument("compute_gamma_tilde: samples must start at t = 0");
    }
    if (!(t0 >= times.front() && t0 <= times.back())) {
        throw std::invalid_argument("compute_gamma_tilde: t0 = " + format_double(t0) + " lies outside the trace");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) throw std::invalid_argument("compute_gamma_tilde: times must increase");
    }

    // Sample times with t0 inserted.
    std::vector<double> ts;
    std::vector<double> fs;
    std::size_t anchor = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (k > 0 && times[k - 1] < t0 && t0 < times[k]) {
            const double w = (t0 - times[k - 1]) / (times[k] - times[k - 1]);
            anchor = ts.size();
            ts.push_back(t0);
            fs.push_back((1.0 - w) * F[k - 1] + w * F[k]);
        }
        if (times[k] == t0) anchor = ts.size();
        ts.push_back(times[k]);
        fs.push_back(F[k]);
    }

    std::vector<double> h(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) h[k] = std::pow(std::abs(fs[k]), p) / (1.0 + ts[k]);

    // P = int_0^s h, Qhat = int_0^s e^{tau - s} h, R = P - Qhat >= 0.
    std::vector<double> rest(ts.size(), 0.0);
    double big_p = 0.0;
    double q_hat = 0.0;
    for (std::size_t k = 1; k < ts.size(); ++k) {
        const double dt = ts[k] - ts[k - 1];
        const double decay = std::exp(-dt);
        big_p += 0.5 * dt * (h[k - 1] + h[k]);
        q_hat = decay * q_hat + 0.5 * dt * (decay * h[k - 1] + h[k]);
        rest[k] = big_p - q_hat;
    }

    GammaTilde out;
    out.t0 = t0;
    out.times.push_back(ts[anchor]);
    out.values.push_back(epsilon);
    double acc = 0.0;  // e^{-t} int_{t0}^t e^s R(s) ds
    for (std::size_t k = anchor + 1; k < ts.size(); ++k) {
        const double dt = ts[k] - ts[k - 1];
        const double decay = std::exp(-dt);
        acc = decay * acc + 0.5 * dt * (decay * rest[k - 1] + rest[k]);
        out.times.push_back(ts[k]);
        out.values.push_back(epsilon + acc);
    }
    return out;
}

double exp_weight_ratio(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("exp_weight_ratio: t must be nonnegative");
    if (t == 0.0) return 0.0;
    const auto integrand = [t](double tau) { return std::exp(tau - t) * (1.0 + t) / (1.0 + tau); };
    return adaptive_simpson(integrand, 0.0, t, 1e-12).value;
}

RatioSupremum exp_weight_ratio_sup(double t_max, double step) {
    if (!(step > 0.0) || !(t_max >= 0.0)) throw std::invalid_argument("exp_weight_ratio_sup: bad sampling range");
    RatioSupremum best{0.0, 0.0};
    const auto count = static_cast<std::size_t>(std::floor(t_max / step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k) {
        const double t = static_cast<double>(k) * step;
        const double r = exp_weight_ratio(t);
        if (r > best.value) best = {r, t};
    }
    return best;
}

}  // namespace lifespan
