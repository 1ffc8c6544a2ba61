#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "lifespan/lifespan_record.hpp"

namespace lifespan {

/// I'' + I' = C0 I^{1+alpha} / (1+t)^beta with I(0) = I0, I'(0) = I0_prime.
struct OdeParams {
    double alpha = 0.5;
    double beta = 1.0;
    double C0 = 1.0;
    double I0 = 1.0;
    double I0_prime = 0.0;

    /// Throws std::invalid_argument unless alpha > 0, 0 <= beta <= 1, C0 > 0,
    /// I0 > 0 and I0_prime >= 0.
    void validate() const;
};

enum class OdeStatus { BlewUp, HorizonReached, StepUnderflow };
std::string_view ode_status_name(OdeStatus status);

struct OdeSample {
    double t;
    double I;
    double dI;
};

struct OdeOptions {
    double horizon = 1e8;
    double tol = 1e-8;
    double blowup_threshold = 1e12;
    /// Drop I'' and integrate I' = C0 I^{1+alpha} / (1+t)^beta instead.
    bool first_order = false;
    std::size_t window = 8;
    /// Absolute step floor; steps that no longer advance t also count as underflow.
    double min_step = 1e-15;
    bool keep_samples = false;
};

struct OdeToleranceReport {
    double tol = 0.0;
    std::size_t rejected = 0;
    /// Largest accepted local error, in units of the mixed tolerance.
    double max_scaled_error = 0.0;
    /// Relative residual of the blow-up rate fit.
    double fit_residual = 0.0;
};

struct OdeResult {
    OdeStatus status = OdeStatus::HorizonReached;
    std::optional<double> T;
    std::size_t steps = 0;
    double last_time = 0.0;
    double last_value = 0.0;
    OdeToleranceReport tolerance_report;
    std::vector<OdeSample> samples;  // accepted steps, when requested
};

/// Classical RK4 with step doubling; the local error is kept below tol in the
/// mixed absolute/relative norm. Once I exceeds the threshold the blow-up time
/// is extrapolated from I ~ c (T - t)^{-2/alpha} (first-order mode: exponent
/// -1/alpha) by a linear fit of I^{-alpha/2} (resp. I^{-alpha}) over the last
/// window accepted steps.
OdeResult integrate(const OdeParams& params, const OdeOptions& options = {});

/// Exact blow-up time of I' = C0 I^{1+alpha} / (1+t)^beta, I(0) = I0.
double first_order_reference(const OdeParams& params);

/// One record per epsilon, with I0 = epsilon and the remaining parameters
/// taken from the template. Records are sorted by epsilon descending.
std::vector<LifespanRecord> sweep(const OdeParams& base, const std::vector<double>& epsilons,
                                  const OdeOptions& options = {});

}  // namespace lifespan
