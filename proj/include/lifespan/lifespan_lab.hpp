#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lifespan/lifespan_record.hpp"
#include "lifespan/ode_blowup.hpp"
#include "lifespan/wave_solver.hpp"

namespace lifespan {

/// Physical and numerical setup of a PDE lifespan run at refinement level 0.
struct PdeSetup {
    int dim = 1;
    double p = 3.0;
    std::string profile = "bump";
    /// Initial velocity g = velocity_scale * f.
    double velocity_scale = 1.0;
    double dr = 0.05;
    /// Initial step; 0 selects cfl * dr.
    double dt0 = 0.0;
    double t_max = 1000.0;
    SolverConfig solver;
    std::size_t node_budget = kDefaultNodeBudget;
};

/// Spacing, step and snapshot cadence all shrink by 2^level.
struct RefinedPde {
    double dr;
    double dt0;
    double cadence;
};
RefinedPde refined(const PdeSetup& setup, int level);

struct PdeCase {
    LifespanRecord record;
    BlowupReport report;
};

/// Runs one epsilon. Snapshots are streamed to sink (when set) and not stored.
/// Numerical failures are reported in the record, never thrown.
PdeCase run_pde_case(const PdeSetup& setup, double epsilon, int level,
                     const std::function<void(const SolutionSnapshot&)>& sink = {});

enum class ExperimentModule { pde, ode };

struct ExperimentSpec {
    ExperimentModule module = ExperimentModule::pde;
    std::vector<double> epsilons;
    int refinement = 0;
    PdeSetup pde;
    OdeParams ode;
    OdeOptions ode_options;
    std::size_t workers = 1;
};

/// Executes one run per epsilon on up to spec.workers threads. Records come
/// back sorted by epsilon descending; failed runs carry their status and a
/// note. Records whose T drops below that of a larger epsilon are relabelled
/// "NonMonotone" and excluded from fits.
std::vector<LifespanRecord> run_experiment(const ExperimentSpec& spec);

/// Relabels BlewUp records whose lifespan is shorter than that of a larger
/// epsilon. Returns the number of records relabelled.
std::size_t flag_monotonicity_violations(std::vector<LifespanRecord>& records);

enum class FitLaw { critical, subcritical, power };
std::string_view law_name(FitLaw law);

struct FitResult {
    FitLaw law = FitLaw::critical;
    /// critical: slope of log T against eps^{-2/n}; subcritical and power: prefactor e^{offset}.
    double C = 0.0;
    double offset = 0.0;
    /// critical: the abscissa power -2/n; otherwise the fitted log-log slope.
    double exponent = 0.0;
    /// subcritical: -1/(1/(p-1) - n/2); critical: -2/n; power: NaN.
    double theoretical_exponent = 0.0;
    double r2 = 0.0;
    std::vector<double> residuals;
    std::size_t points = 0;
    bool log1p = false;
};

/// Least squares of log T (or log(1+T)) against eps^{-2/n}. Needs three BlewUp records.
FitResult fit_critical(const std::vector<LifespanRecord>& records, int dim, bool use_log1p = false);

/// Least squares of log T against log eps; rejects p >= 1 + 2/n.
FitResult fit_subcritical(const std::vector<LifespanRecord>& records, int dim, double p);

/// Least squares of log T against log eps with no exponent target.
FitResult fit_power_law(const std::vector<LifespanRecord>& records);

using Fitter = std::function<FitResult(const std::vector<LifespanRecord>&)>;

/// Largest relative change of C when any single BlewUp record is dropped.
/// Needs four BlewUp records.
double leave_one_out_change(const std::vector<LifespanRecord>& records, const Fitter& fitter);

struct BootstrapInterval {
    double lo;
    double hi;
    std::size_t resamples;
};

/// Percentile interval (2.5%, 97.5%) of C over resampled BlewUp records.
BootstrapInterval bootstrap_fit(const std::vector<LifespanRecord>& records, const Fitter& fitter,
                                std::size_t resamples, std::uint64_t seed);

void write_records_csv(std::ostream& out, const std::vector<LifespanRecord>& records);
/// Inverse of write_records_csv; refinement metadata is not stored and stays at
/// its defaults. Throws std::invalid_argument on malformed input.
std::vector<LifespanRecord> read_records_csv(std::istream& in);

void write_summary(std::ostream& out, const std::vector<LifespanRecord>& records, const std::vector<FitResult>& fits);

/// Summary file written next to a report CSV.
std::string summary_path(const std::string& csv_path);

/// Writes the CSV to path and the summary block to summary_path(path).
/// Throws std::runtime_error naming the path on I/O failure.
void emit_report(const std::vector<LifespanRecord>& records, const std::vector<FitResult>& fits,
                 const std::string& path);

/// Flat key=value text. Blank lines and lines starting with '#' are ignored;
/// keys and values are trimmed. Throws std::invalid_argument on malformed lines.
std::map<std::string, std::string> parse_config(std::istream& in);

}  // namespace lifespan
