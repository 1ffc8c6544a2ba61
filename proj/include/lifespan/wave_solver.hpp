#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lifespan/radial_grid.hpp"

namespace lifespan {

/// Raised when the discrete solution overflows before the blow-up guard fires.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Radial data for u_tt - Delta u + u_t = |u|^p with u(0) = eps f, u_t(0) = eps g.
struct ProblemSpec {
    int dim;
    double p;
    double epsilon;
    RadialProfile f;
    RadialProfile g;
    double t_max;
    bool nonlinearity_on = true;

    /// Throws std::invalid_argument unless f, g >= 0 vanish for r > 1, p > 1,
    /// epsilon >= 0 and both profiles live on a grid of dimension dim.
    void validate() const;
};

enum class InitialShape { bump, cone, plateau };

InitialShape parse_shape(std::string_view name);
std::string_view shape_name(InitialShape shape);

/// Unit-ball supported data on the grid. All shapes are nonnegative, vanish
/// for r >= 1 and have positive mass. The velocity is g = velocity_scale * f.
std::pair<RadialProfile, RadialProfile> sample_initial_profiles(InitialShape shape, const RadialGrid& grid,
                                                                double velocity_scale = 1.0);
std::pair<RadialProfile, RadialProfile> sample_initial_profiles(std::string_view name, const RadialGrid& grid,
                                                                double velocity_scale = 1.0);

inline constexpr std::size_t kDefaultNodeBudget = 1'000'000;

/// Grid out to r_max = 1 + t_max + 10 dr. Data supported in the unit ball
/// never reaches the outer boundary before t_max.
RadialGrid make_grid(int dim, double t_max, double dr, std::size_t node_budget = kDefaultNodeBudget);

struct SupSample {
    double t;
    double sup;
};

struct SolverState {
    double t = 0.0;
    std::vector<double> u;
    std::vector<double> v;  // u_t at time t
    double dt = 0.0;        // size of the next step
    std::vector<SupSample> sup_history;
};

/// Time-stamped copy of (u, u_t). Trailing exact zeros are trimmed; index i
/// is node i of the run grid.
struct SolutionSnapshot {
    double t;
    std::vector<double> u;
    std::vector<double> v;
};

struct SolverConfig {
    double cfl = 0.5;
    double theta = 0.1;
    double blowup_threshold = 1e8;
    double min_dt = 1e-12;
    double snapshot_cadence = 0.05;
    bool keep_snapshots = true;
    std::size_t extrapolation_window = 8;
    double max_fit_residual = 0.1;
    /// Called with every snapshot in time order, whether or not it is kept.
    std::function<void(const SolutionSnapshot&)> snapshot_sink;
};

enum class BlowupStatus { BlewUp, Survived, Inconclusive };
std::string_view status_name(BlowupStatus status);

/// Growth law assumed by the lifespan extrapolation: sup|u| ~ c (T - t)^{-k}.
/// first_order uses k = 1/(p-1) (the rate of u' = u^p); second_order uses
/// k = 2/(p-1), the dominant balance u_tt ~ |u|^p of the damped wave equation.
enum class BlowupRate { first_order, second_order };

struct BlowupReport {
    BlowupStatus status = BlowupStatus::Inconclusive;
    std::optional<double> t_est;
    std::vector<SupSample> window;
    double residual = 0.0;
    double last_time = 0.0;
};

struct BlowupFitOptions {
    std::size_t window = 8;
    double threshold = 1e8;
    double max_residual = 0.1;
    BlowupRate rate = BlowupRate::second_order;
};

/// Extrapolates the lifespan from the tail of a sup-norm history. Histories
/// that stay below the threshold are reported as Survived. Otherwise
/// y_k = sup_k^{-1/k} is fit linearly in t over the last window points and the
/// root is returned; a non-monotone window, a nondecreasing y or a relative
/// fit residual above max_residual yields Inconclusive.
BlowupReport detect_blowup(const std::vector<SupSample>& history, double p, const BlowupFitOptions& options = {});

/// State at t = 0 with v = eps g and dt = dt0.
SolverState initial_state(const ProblemSpec& spec, const RadialGrid& grid, double dt0);

/// One step of size state.dt. For constant steps this is the three-level scheme
///   (u+ - 2u + u-)/dt^2 + (u+ - u-)/(2 dt) = Delta_h u + |u|^p,
/// written as a damped kick-drift-kick update so the step size may vary. The
/// outer node is held at zero. Throws std::invalid_argument if state.dt exceeds
/// cfl * dr and NumericalError on overflow.
SolverState step(const SolverState& state, const ProblemSpec& spec, const RadialGrid& grid,
                 double cfl = SolverConfig{}.cfl);

struct RunResult {
    std::vector<SolutionSnapshot> trace;
    BlowupReport report;
    std::size_t steps = 0;
    SolverState final_state;
};

/// Integrates from t = 0 with dt_k = min(dt0, theta / max(1, sup|u|)^{(p-1)/2}),
/// steps clipped to land on snapshot times. Stops when sup|u| exceeds the
/// blow-up threshold, t reaches t_max, or dt falls below min_dt.
RunResult run(const ProblemSpec& spec, const RadialGrid& grid, double dt0, const SolverConfig& config = {});

/// 1/2 sum_i w_i (v_i^2 + (d_r u)_i^2) with centred radial differences.
double discrete_energy(const RadialGrid& grid, const std::vector<double>& u, const std::vector<double>& v);

/// Largest node radius with |u| above tol, or 0 when u vanishes.
double support_radius(const RadialGrid& grid, const std::vector<double>& u, double tol = 0.0);

/// CSV with header t,r,u,v and one row per (snapshot, node).
void write_snapshots_csv(std::ostream& out, const RadialGrid& grid, const std::vector<SolutionSnapshot>& trace);

struct SnapshotFile {
    RadialGrid grid;
    std::vector<SolutionSnapshot> trace;
};

/// Reads the format written by write_snapshots_csv. The grid spacing is taken
/// from the first snapshot's radii; dim is supplied by the caller.
SnapshotFile read_snapshots_csv(std::istream& in, int dim);

}  // namespace lifespan
