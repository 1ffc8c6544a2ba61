#include "lifespan/wave_solver.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "lifespan/text_format.hpp"

namespace lifespan {

namespace {

// Values below this are flushed to zero so the numerical precursor ahead of
// the light cone never drops into subnormal arithmetic.
constexpr double kFlushBelow = 1e-250;

double abs_pow(double x, double p) {
    const double a = std::abs(x);
    if (p == 2.0) return a * a;
    if (p == 3.0) return a * a * a;
    if (p == 1.5) return a * std::sqrt(a);
    return std::pow(a, p);
}

double sup_norm(const std::vector<double>& u) {
    double m = 0.0;
    for (double x : u) m = std::max(m, std::abs(x));
    return m;
}

// Delta_h u + |u|^p on nodes [0, end); end never includes the outer node.
void compute_force(const RadialGrid& grid, const std::vector<double>& u, std::vector<double>& out, std::size_t end,
                   double p, bool nonlinear) {
    const double h = grid.dr();
    const double inv_h2 = 1.0 / (h * h);
    const double half_inv_h = 0.5 / h;
    const double dim_m1 = grid.dim() - 1;
    if (end == 0) return;
    out[0] = 2.0 * grid.dim() * (u[1] - u[0]) * inv_h2;
    for (std::size_t i = 1; i < end; ++i) {
        const double urr = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
        const double ur = (u[i + 1] - u[i - 1]) * half_inv_h;
        out[i] = urr + dim_m1 / (static_cast<double>(i) * h) * ur;
    }
    if (nonlinear) {
        for (std::size_t i = 0; i < end; ++i) out[i] += abs_pow(u[i], p);
    }
}

// Index one past the last node where u or v is nonzero.
std::size_t occupied_extent(const std::vector<double>& u, const std::vector<double>& v) {
    std::size_t n = u.size();
    while (n > 0 && u[n - 1] == 0.0 && v[n - 1] == 0.0) --n;
    return n;
}

struct Stepper {
    const ProblemSpec& spec;
    const RadialGrid& grid;
    std::vector<double> force;
    std::vector<double> v_half;
    bool force_valid = false;
    std::size_t active = 0;  // nodes [0, active) may be nonzero

    Stepper(const ProblemSpec& s, const RadialGrid& g)
        : spec(s), grid(g), force(g.size(), 0.0), v_half(g.size(), 0.0) {}

    // Advances state in place by state.dt and returns the new sup norm.
    // Invariant between calls: u, v vanish on [active, last] and force is
    // current on [0, active + 1).
    double advance(SolverState& state) {
        const std::size_t last = grid.size() - 1;
        if (!force_valid) {
            active = std::min(last, occupied_extent(state.u, state.v));
            compute_force(grid, state.u, force, std::min(last, active + 1), spec.p, spec.nonlinearity_on);
            force_valid = true;
        }
        const std::size_t drift_end = std::min(last, active + 1);
        const std::size_t kick_end = std::min(last, active + 2);
        const std::size_t force_end = std::min(last, active + 3);
        const double h = state.dt;
        const double half = 0.5 * h;
        std::vector<double>& u = state.u;
        std::vector<double>& v = state.v;
        for (std::size_t i = 0; i < drift_end; ++i) {
            v_half[i] = v[i] + half * (force[i] - v[i]);
            u[i] += h * v_half[i];
        }
        for (std::size_t i = drift_end; i < kick_end; ++i) v_half[i] = 0.0;
        compute_force(grid, u, force, force_end, spec.p, spec.nonlinearity_on);
        const double inv = 1.0 / (1.0 + half);
        double sup = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < kick_end; ++i) {
            double vi = (v_half[i] + half * force[i]) * inv;
            if (std::abs(vi) < kFlushBelow) vi = 0.0;
            if (std::abs(u[i]) < kFlushBelow) u[i] = 0.0;
            v[i] = vi;
            finite = finite && std::isfinite(u[i]) && std::isfinite(vi);
            sup = std::max(sup, std::abs(u[i]));
        }
        if (!finite || !std::isfinite(sup)) {
            throw NumericalError("non-finite solution at t = " + std::to_string(state.t + h));
        }
        active = kick_end;
        while (active > 0 && u[active - 1] == 0.0 && v[active - 1] == 0.0) --active;
        state.t += h;
        return sup;
    }
};

SolutionSnapshot snapshot_of(const SolverState& s) {
    const std::size_t keep = std::max<std::size_t>(2, occupied_extent(s.u, s.v));
    SolutionSnapshot snap{s.t, std::vector<double>(s.u.begin(), s.u.begin() + keep),
                          std::vector<double>(s.v.begin(), s.v.begin() + keep)};
    return snap;
}

double smooth_step_from_one(double x) {
    // 1 at x <= 0, 0 at x >= 1, C-infinity in between
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / (1.0 - x));
    const double b = std::exp(-1.0 / x);
    return a / (a + b);
}

}  // namespace

void ProblemSpec::validate() const {
    if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("ProblemSpec: p must exceed 1");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument("ProblemSpec: epsilon must be nonnegative");
    }
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("ProblemSpec: t_max must be finite");
    if (f.grid.dim() != dim || g.grid.dim() != dim) {
        throw std::invalid_argument("ProblemSpec: profile grid dimension differs from dim");
    }
    if (!(f.grid == g.grid)) throw std::invalid_argument("ProblemSpec: f and g live on different grids");
    for (const RadialProfile* prof : {&f, &g}) {
        for (std::size_t i = 0; i < prof->values.size(); ++i) {
            const double x = prof->values[i];
            if (!std::isfinite(x) || x < 0.0) throw std::invalid_argument("ProblemSpec: data must be nonnegative");
            if (prof->grid.node(i) > 1.0 + 1e-12 && x != 0.0) {
                throw std::invalid_argument("ProblemSpec: data must vanish outside the unit ball");
            }
        }
    }
}

InitialShape parse_shape(std::string_view name) {
    if (name == "bump") return InitialShape::bump;
    if (name == "cone") return InitialShape::cone;
    if (name == "plateau") return InitialShape::plateau;
    throw std::invalid_argument("unknown initial profile '" + std::string(name) + "' (expected bump, cone or plateau)");
}

std::string_view shape_name(InitialShape shape) {
    switch (shape) {
        case InitialShape::bump: return "bump";
        case InitialShape::cone: return "cone";
        case InitialShape::plateau: return "plateau";
    }
    return "unknown";
}

std::pair<RadialProfile, RadialProfile> sample_initial_profiles(InitialShape shape, const RadialGrid& grid,
                                                                double velocity_scale) {
    if (!(velocity_scale >= 0.0) || !std::isfinite(velocity_scale)) {
        throw std::invalid_argument("sample_initial_profiles: velocity scale must be finite and nonnegative");
    }
    auto fn = [shape](double r) -> double {
        if (r >= 1.0) return 0.0;
        switch (shape) {
            case InitialShape::bump: return std::exp(1.0 - 1.0 / (1.0 - r * r));
            case InitialShape::cone: return 1.0 - r;
            case InitialShape::plateau: return smooth_step_from_one((r - 0.5) / 0.5);
        }
        return 0.0;
    };
    RadialProfile f = RadialProfile::sampled(grid, fn);
    RadialProfile g = f;
    for (double& x : g.values) x *= velocity_scale;
    return {std::move(f), std::move(g)};
}

std::pair<RadialProfile, RadialProfile> sample_initial_profiles(std::string_view name, const RadialGrid& grid,
                                                                double velocity_scale) {
    return sample_initial_profiles(parse_shape(name), grid, velocity_scale);
}

RadialGrid make_grid(int dim, double t_max, double dr, std::size_t node_budget) {
    if (!(dr > 0.0) || !std::isfinite(dr)) throw std::invalid_argument("make_grid: dr must be positive");
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("make_grid: t_max must be finite");
    const double r_max = 1.0 + t_max + 10.0 * dr;
    const double nodes = std::ceil(r_max / dr - 1e-9) + 1.0;
    if (nodes > static_cast<double>(node_budget)) {
        const double suggested = r_max / static_cast<double>(node_budget - 1);
        throw std::invalid_argument("make_grid: " + std::to_string(static_cast<long long>(nodes)) +
                                    " nodes exceed the budget of " + std::to_string(node_budget) +
                                    "; use dr >= " + format_double(suggested));
    }
    return RadialGrid::covering(dim, dr, r_max);
}

std::string_view status_name(BlowupStatus status) {
    switch (status) {
        case BlowupStatus::BlewUp: return "BlewUp";
        case BlowupStatus::Survived: return "Survived";
        case BlowupStatus::Inconclusive: return "Inconclusive";
    }
    return "unknown";
}

BlowupReport detect_blowup(const std::vector<SupSample>& history, double p, const BlowupFitOptions& options) {
    BlowupReport report;
    if (history.empty()) return report;
    report.last_time = history.back().t;
    if (history.back().sup <= options.threshold) {
        report.status = BlowupStatus::Survived;
        return report;
    }
    const std::size_t m = options.window;
    if (m < 3 || history.size() < m) return report;
    report.window.assign(history.end() - static_cast<std::ptrdiff_t>(m), history.end());
    for (std::size_t k = 1; k < m; ++k) {
        if (!(report.window[k].sup > report.window[k - 1].sup) || !(report.window[k].t > report.window[k - 1].t)) {
            return report;
        }
    }
    const double power = options.rate == BlowupRate::first_order ? (p - 1.0) : 0.5 * (p - 1.0);
    // Centre t on the window to keep the normal equations well conditioned.
    const double t_ref = report.window.back().t;
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0, syy = 0.0;
    std::vector<double> ts(m), ys(m);
    for (std::size_t k = 0; k < m; ++k) {
        ts[k] = report.window[k].t - t_ref;
        ys[k] = std::pow(report.window[k].sup, -power);
        st += ts[k];
        sy += ys[k];
        stt += ts[k] * ts[k];
        sty += ts[k] * ys[k];
        syy += ys[k] * ys[k];
    }
    const double md = static_cast<double>(m);
    const double denom = md * stt - st * st;
    if (!(denom > 0.0)) return report;
    const double slope = (md * sty - st * sy) / denom;
    const double intercept = (sy - slope * st) / md;
    double ss_res = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double r = ys[k] - (intercept + slope * ts[k]);
        ss_res += r * r;
    }
    report.residual = std::sqrt(ss_res / syy);
    if (!(slope < 0.0) || report.residual > options.max_residual) return report;
    const double root = t_ref - intercept / slope;
    if (!(root >= report.last_time)) return report;
    report.status = BlowupStatus::BlewUp;
    report.t_est = root;
    return report;
}

SolverState initial_state(const ProblemSpec& spec, const RadialGrid& grid, double dt0) {
    spec.validate();
    if (!(spec.f.grid == grid)) throw std::invalid_argument("initial_state: data grid differs from solver grid");
    SolverState s;
    s.t = 0.0;
    s.dt = dt0;
    s.u.resize(grid.size());
    s.v.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        s.u[i] = spec.epsilon * spec.f.values[i];
        s.v[i] = spec.epsilon * spec.g.values[i];
    }
    s.u.back() = 0.0;
    s.v.back() = 0.0;
    s.sup_history.push_back({0.0, sup_norm(s.u)});
    return s;
}

SolverState step(const SolverState& state, const ProblemSpec& spec, const RadialGrid& grid, double cfl) {
    if (!(state.dt > 0.0) || state.dt > cfl * grid.dr() * (1.0 + 1e-12)) {
        throw std::invalid_argument("step: dt must be positive and satisfy dt <= cfl * dr");
    }
    if (state.u.size() != grid.size() || state.v.size() != grid.size()) {
        throw std::invalid_argument("step: state arrays do not match the grid");
    }
    SolverState next = state;
    Stepper stepper(spec, grid);
    const double sup = stepper.advance(next);
    next.sup_history.push_back({next.t, sup});
    return next;
}

RunResult run(const ProblemSpec& spec, const RadialGrid& grid, double dt0, const SolverConfig& config) {
    if (!(dt0 > 0.0) || dt0 > config.cfl * grid.dr() * (1.0 + 1e-12)) {
        throw std::invalid_argument("run: dt0 must be positive and satisfy dt0 <= cfl * dr (cfl = " +
                                    format_double(config.cfl) + ")");
    }
    if (!(config.snapshot_cadence > 0.0)) throw std::invalid_argument("run: snapshot cadence must be positive");
    RunResult result;
    SolverState state = initial_state(spec, grid, dt0);
    Stepper stepper(spec, grid);
    auto record = [&](const SolverState& s) {
        if (!config.keep_snapshots && !config.snapshot_sink) return;
        SolutionSnapshot snap = snapshot_of(s);
        if (config.snapshot_sink) config.snapshot_sink(snap);
        if (config.keep_snapshots) result.trace.push_back(std::move(snap));
    };
    record(state);
    double recorded_time = state.t;

    const BlowupFitOptions fit{config.extrapolation_window, config.blowup_threshold, config.max_fit_residual,
                               BlowupRate::second_order};
    const double growth_power = 0.5 * (spec.p - 1.0);
    std::size_t mark = 1;
    double sup = state.sup_history.back().sup;
    while (true) {
        if (sup > config.blowup_threshold) {
            result.report = detect_blowup(state.sup_history, spec.p, fit);
            if (result.report.status == BlowupStatus::Survived) result.report.status = BlowupStatus::Inconclusive;
            break;
        }
        if (state.t >= spec.t_max) {
            result.report.status = BlowupStatus::Survived;
            result.report.last_time = state.t;
            break;
        }
        double dt = std::min(dt0, config.theta / std::pow(std::max(1.0, sup), growth_power));
        if (dt < config.min_dt || state.t + dt == state.t) {
            result.report.status = BlowupStatus::Inconclusive;
            result.report.last_time = state.t;
            break;
        }
        const double next_mark = std::min(static_cast<double>(mark) * config.snapshot_cadence, spec.t_max);
        bool lands_on_mark = false;
        if (state.t + dt >= next_mark) {
            dt = next_mark - state.t;
            lands_on_mark = true;
        }
        state.dt = dt;
        sup = stepper.advance(state);
        if (lands_on_mark) {
            state.t = next_mark;
            if (next_mark >= static_cast<double>(mark) * config.snapshot_cadence) ++mark;
            record(state);
            recorded_time = state.t;
        }
        state.sup_history.push_back({state.t, sup});
        ++result.steps;
    }
    if (recorded_time != state.t) record(state);
    result.final_state = std::move(state);
    return result;
}

double discrete_energy(const RadialGrid& grid, const std::vector<double>& u, const std::vector<double>& v) {
    const std::size_t n = grid.size();
    const double h = grid.dr();
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double ur = 0.0;
        if (i > 0 && i + 1 < n) ur = (u[i + 1] - u[i - 1]) / (2.0 * h);
        if (i + 1 == n) ur = (u[i] - u[i - 1]) / h;
        e += grid.weight(i) * (v[i] * v[i] + ur * ur);
    }
    return 0.5 * e;
}

double support_radius(const RadialGrid& grid, const std::vector<double>& u, double tol) {
    for (std::size_t i = u.size(); i > 0; --i) {
        if (std::abs(u[i - 1]) > tol) return grid.node(i - 1);
    }
    return 0.0;
}

void write_snapshots_csv(std::ostream& out, const RadialGrid& grid, const std::vector<SolutionSnapshot>& trace) {
    out << "t,r,u,v\n";
    for (const SolutionSnapshot& s : trace) {
        const std::string t = format_double(s.t);
        for (std::size_t i = 0; i < s.u.size(); ++i) {
            out << t << ',' << format_double(grid.node(i)) << ',' << format_double(s.u[i]) << ','
                << format_double(s.v[i]) << '\n';
        }
    }
}

SnapshotFile read_snapshots_csv(std::istream& in, int dim) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("snapshot CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,r,u,v") throw std::invalid_argument("snapshot CSV: expected header t,r,u,v, got '" + line + "'");
    std::vector<SolutionSnapshot> trace;
    double dr = 0.0;
    std::size_t longest = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_fields(line);
        if (fields.size() != 4) {
            throw std::invalid_argument("snapshot CSV line " + std::to_string(line_no) + ": expected 4 fields");
        }
        const double t = parse_double(fields[0]);
        const double r = parse_double(fields[1]);
        if (trace.empty() || trace.back().t != t) {
            if (!trace.empty() && t < trace.back().t) {
                throw std::invalid_argument("snapshot CSV line " + std::to_string(line_no) + ": time decreases");
            }
            trace.push_back({t, {}, {}});
        }
        SolutionSnapshot& s = trace.back();
        if (s.u.size() == 1 && dr == 0.0) dr = r;
        s.u.push_back(parse_double(fields[2]));
        s.v.push_back(parse_double(fields[3]));
        longest = std::max(longest, s.u.size());
    }
    if (trace.empty() || !(dr > 0.0)) throw std::invalid_argument("snapshot CSV: need at least two radii");
    return {RadialGrid(dim, dr, longest + 1), std::move(trace)};
}

}  // namespace lifespan
