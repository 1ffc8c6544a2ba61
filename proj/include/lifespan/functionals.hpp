#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lifespan/radial_grid.hpp"
#include "lifespan/wave_solver.hpp"

namespace lifespan {

/// Largest snapshot spacing for which the time integrals are trusted.
inline constexpr double kMaxFunctionalCadence = 0.1;

/// Gaussian-weighted integrals of u at scale t+1:
///   G = int e^{-|x|^2/4(t+1)} u dx
///   F = (int e^{-|x|^2/4(t+1)} |u|^p dx)^{1/p} (t+1)^{n(p-1)/(2p)}
///   A = int e^{-|x|^2/4(t+1)} u_t dx
double compute_G(const SolutionSnapshot& snap, const RadialGrid& grid);
double compute_F(const SolutionSnapshot& snap, const RadialGrid& grid, double p);
double compute_A(const SolutionSnapshot& snap, const RadialGrid& grid);

/// int e^{-|x|^2/4(t+1)} |u| |x|^2 dx / (4 (t+1)^2), the correction between A and dG/dt.
double compute_moment_term(const SolutionSnapshot& snap, const RadialGrid& grid);

/// Hoelder constant in G <= c F, (4 pi)^{n(p-1)/(2p)}.
double holder_constant(int dim, double p);

/// Constant K with compute_moment_term <= K F / (t+1):
/// 4^{n(p-1)/(2p)} (|S^{n-1}| Gamma(p' + n/2) / 2)^{(p-1)/p}, p' = p/(p-1).
double moment_bound_constant(int dim, double p);

/// Terms of the heat-kernel identity at one time t:
///   G + A + B = ((t+1)/(2t+1))^{n/2} int e^{-|x|^2/4(2t+1)} (u_0 + v_0) dx + D.
struct DuhamelSample {
    double t = 0.0;
    double G = 0.0;
    double A = 0.0;
    double B = 0.0;
    double D = 0.0;
    double free_term = 0.0;
    /// |G + A + B - free_term - D| / (1 + |free_term + D|)
    double residual = 0.0;
    /// 2^{-n/2} times the trapezoid of F^p/(1+tau) on the same samples as D.
    double d_lower = 0.0;
    /// Estimated trapezoid error of D, |D_h - D_2h| / 3.
    double d_quadrature_error = 0.0;
};

/// Consumes snapshots in time order and evaluates B, D and the identity at a
/// fixed set of times. Memory does not grow with the trace length, so long
/// trajectories can be processed while the solver runs. The first snapshot
/// must be at t = 0; it supplies the initial data unless given explicitly.
class DuhamelAccumulator {
public:
    DuhamelAccumulator(RadialGrid grid, double p, std::vector<double> eval_times,
                       std::optional<std::vector<double>> initial_sum = std::nullopt);

    void consume(const SolutionSnapshot& snap);

    const std::vector<DuhamelSample>& samples() const { return done_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    struct Pending {
        double t;
        double b_fine = 0.0, d_fine = 0.0;
        double d_coarse = 0.0;  // trapezoid over even-index samples
        double b_prev = 0.0, d_prev = 0.0;  // integrand at the previous sample
        double d_even = 0.0;                // integrand at the last even-index sample
    };

    void finish(const Pending& pending, const SolutionSnapshot& snap);

    RadialGrid grid_;
    double p_;
    std::vector<Pending> pending_;
    std::size_t next_done_ = 0;
    std::optional<std::vector<double>> initial_sum_;
    std::vector<DuhamelSample> done_;
    std::vector<std::string> warnings_;
    std::size_t count_ = 0;
    double prev_t_ = 0.0;
    double prev_even_t_ = 0.0;
    double lower_ = 0.0;      // running trapezoid of F^p/(1+tau)
    double lower_prev_ = 0.0;
    std::vector<double> abs_pow_;
};

struct FunctionalTrace {
    int dim = 0;
    double p = 0.0;
    std::vector<double> times;
    std::vector<double> G;
    std::vector<double> F;
    std::vector<double> A;
    std::vector<double> moment_term;
    std::vector<DuhamelSample> duhamel;
    std::vector<std::string> warnings;
};

/// Streaming builder for FunctionalTrace: G, F, A at every snapshot, the
/// identity terms at the requested times.
class FunctionalRecorder {
public:
    FunctionalRecorder(RadialGrid grid, double p, std::vector<double> duhamel_times);
    void consume(const SolutionSnapshot& snap);
    FunctionalTrace finish() const;

private:
    RadialGrid grid_;
    FunctionalTrace trace_;
    DuhamelAccumulator duhamel_;
};

FunctionalTrace evaluate_functionals(const std::vector<SolutionSnapshot>& trace, const RadialGrid& grid, double p,
                                     const std::vector<double>& duhamel_times);

/// Single-time conveniences over a stored trace; t must be a snapshot time.
double compute_D(const std::vector<SolutionSnapshot>& trace, const RadialGrid& grid, double p, double t);
double compute_B(const std::vector<SolutionSnapshot>& trace, const RadialGrid& grid, double t);

/// Identity residual at time t with the free term built from eps (f + g).
DuhamelSample check_duhamel(const std::vector<SolutionSnapshot>& trace, const ProblemSpec& spec, double t);

struct GammaTilde {
    double t0 = 0.0;
    std::vector<double> times;   // t0 followed by the sample times after it
    std::vector<double> values;  // values[0] == epsilon
};

/// eps + e^{-t} int_{t0}^t int_0^s (e^s - e^tau) F^p(tau) / (1+tau) dtau ds by
/// nested trapezoids on the sample times, in a rescaled form that never forms
/// e^t. F is interpolated linearly at t0 when t0 is not a sample time.
GammaTilde compute_gamma_tilde(const std::vector<double>& times, const std::vector<double>& F, double t0,
                               double epsilon, double p);

/// (int_0^t e^tau / (1+tau) dtau) (1+t) / e^t by adaptive quadrature.
double exp_weight_ratio(double t);

struct RatioSupremum {
    double value;
    double at;
};

/// Largest exp_weight_ratio over t = 0, step, 2 step, ... <= t_max.
RatioSupremum exp_weight_ratio_sup(double t_max, double step);

}  // namespace lifespan
