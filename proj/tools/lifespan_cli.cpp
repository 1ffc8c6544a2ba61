#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lifespan/functionals.hpp"
#include "lifespan/heat_kernel.hpp"
#include "lifespan/lifespan_lab.hpp"
#include "lifespan/ode_blowup.hpp"
#include "lifespan/text_format.hpp"
#include "lifespan/wave_solver.hpp"

using namespace lifespan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNumerical = 2;

// String-valued options backed by an optional key=value file; flags given on
// the command line take precedence over the file.
class Options {
public:
    explicit Options(CLI::App* app) : app_(app) {
        app_->add_option("--config", config_path_, "key=value file; command-line flags override it");
    }

    void add(const std::string& name, const std::string& help, const std::string& fallback = "") {
        values_[name] = fallback;
        options_[name] = app_->add_option("--" + name, values_[name], help);
    }

    void add_flag(const std::string& name, const std::string& help) {
        flags_[name] = false;
        options_[name] = app_->add_flag("--" + name, flags_[name], help);
    }

    void resolve() {
        if (config_path_.empty()) return;
        std::ifstream in(config_path_);
        if (!in) throw std::invalid_argument("cannot read config file '" + config_path_ + "'");
        for (const auto& [raw_key, value] : parse_config(in)) {
            std::string key = raw_key;
            std::replace(key.begin(), key.end(), '_', '-');
            const auto opt = options_.find(key);
            if (opt == options_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
            if (opt->second->count() > 0) continue;
            from_config_.insert(key);
            if (const auto flag = flags_.find(key); flag != flags_.end()) {
                if (value != "true" && value != "false") {
                    throw std::invalid_argument("config key '" + key + "' expects true or false");
                }
                flag->second = value == "true";
            } else {
                values_[key] = value;
            }
        }
    }

    bool given(const std::string& name) const {
        return options_.at(name)->count() > 0 || from_config_.count(name) > 0;
    }
    const std::string& text(const std::string& name) const { return values_.at(name); }
    bool flag(const std::string& name) const { return flags_.at(name); }

    double number(const std::string& name) const {
        try {
            return parse_double(text(name));
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("--" + name + ": expected a number, got '" + text(name) + "'");
        }
    }

    int integer(const std::string& name) const {
        const double x = number(name);
        if (x != std::floor(x) || std::abs(x) > 1e9) {
            throw std::invalid_argument("--" + name + ": expected an integer, got '" + text(name) + "'");
        }
        return static_cast<int>(x);
    }

    std::size_t count(const std::string& name) const {
        const int x = integer(name);
        if (x < 0) throw std::invalid_argument("--" + name + ": must be nonnegative");
        return static_cast<std::size_t>(x);
    }

    std::vector<double> list(const std::string& name) const {
        std::vector<double> out;
        if (text(name).empty()) return out;
        for (std::string_view field : split_fields(text(name))) {
            const auto first = field.find_first_not_of(' ');
            const auto last = field.find_last_not_of(' ');
            if (first == std::string_view::npos) throw std::invalid_argument("--" + name + ": empty list entry");
            try {
                out.push_back(parse_double(field.substr(first, last - first + 1)));
            } catch (const std::invalid_argument&) {
                throw std::invalid_argument("--" + name + ": bad list entry '" + std::string(field) + "'");
            }
        }
        return out;
    }

private:
    CLI::App* app_;
    std::string config_path_;
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> flags_;
    std::map<std::string, CLI::Option*> options_;
    std::set<std::string> from_config_;
};

// Writes to the named file, or to stdout when the path is empty.
void write_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
    if (path.empty()) {
        body(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string optional_cell(bool present, double value) { return present ? format_double(value) : std::string(); }

bool is_failure(const LifespanRecord& r) { return r.status == "NumericalError" || r.status == "Error"; }

// ---------------------------------------------------------------- kernel-check

void add_kernel_options(Options& o) {
    o.add("dim", "dimension of the heat-residual refinement check", "3");
    o.add("dr", "coarse spacing of the heat-residual refinement check", "0.1");
    o.add("out", "output CSV path (stdout when omitted)");
}

int kernel_check(const Options& o) {
    const auto checks = kernel_validation_suite(o.integer("dim"), o.number("dr"));
    bool all = true;
    write_output(o.text("out"), [&](std::ostream& out) {
        out << "check,dim,t,s,value,lower,upper,passed\n";
        for (const auto& c : checks) {
            all = all && c.passed;
            out << c.name << ',' << c.dim << ',' << format_double(c.t) << ',' << format_double(c.s) << ','
                << format_double(c.value) << ',' << (std::isfinite(c.lower) ? format_double(c.lower) : "") << ','
                << format_double(c.upper) << ',' << (c.passed ? "true" : "false") << '\n';
        }
    });
    return all ? kExitOk : kExitNumerical;
}

// ------------------------------------------------------------------- pde-sweep

void add_pde_options(Options& o) {
    const SolverConfig solver;
    o.add("dim", "spatial dimension", "1");
    o.add("p", "nonlinearity exponent", "3");
    o.add("eps", "comma-separated amplitudes");
    o.add("dr", "radial spacing at refinement level 0", "0.05");
    o.add("dt", "initial time step (default cfl * dr)", "0");
    o.add("t-max", "time horizon", "1000");
    o.add("profile", "initial shape: bump, cone or plateau", "bump");
    o.add("velocity-scale", "initial velocity g = scale * f", "1");
    o.add("refine", "refinement level; dr, dt and cadence shrink by 2^level", "0");
    o.add("workers", "concurrent runs", "1");
    o.add("cfl", "CFL number", format_double(solver.cfl));
    o.add("theta", "amplitude-adaptive step factor", format_double(solver.theta));
    o.add("threshold", "sup-norm blow-up threshold", format_double(solver.blowup_threshold));
    o.add("min-dt", "smallest admissible step", format_double(solver.min_dt));
    o.add("cadence", "snapshot cadence at refinement level 0", format_double(solver.snapshot_cadence));
    o.add("window", "blow-up extrapolation window", std::to_string(solver.extrapolation_window));
    o.add("max-fit-residual", "largest accepted extrapolation residual", format_double(solver.max_fit_residual));
    o.add("node-budget", "largest grid size", std::to_string(kDefaultNodeBudget));
    o.add("fit", "law to fit: auto, critical, subcritical, power or none", "auto");
    o.add("dump", "snapshot CSV (t,r,u,v) for a single-amplitude run");
    o.add("out", "records CSV path; the summary goes to <out>.summary.txt (stdout/stderr when omitted)");
}

PdeSetup pde_setup(const Options& o) {
    PdeSetup s;
    s.dim = o.integer("dim");
    s.p = o.number("p");
    s.dr = o.number("dr");
    s.dt0 = o.number("dt");
    s.t_max = o.number("t-max");
    s.profile = o.text("profile");
    parse_shape(s.profile);
    s.velocity_scale = o.number("velocity-scale");
    s.solver.cfl = o.number("cfl");
    s.solver.theta = o.number("theta");
    s.solver.blowup_threshold = o.number("threshold");
    s.solver.min_dt = o.number("min-dt");
    s.solver.snapshot_cadence = o.number("cadence");
    s.solver.extrapolation_window = o.count("window");
    s.solver.max_fit_residual = o.number("max-fit-residual");
    s.node_budget = o.count("node-budget");
    if (s.dim < 1) throw std::invalid_argument("--dim must be at least 1");
    if (!(s.t_max > 0.0)) throw std::invalid_argument("--t-max must be positive");
    if (!(s.solver.theta > 0.0) || !(s.solver.cfl > 0.0) || !(s.solver.snapshot_cadence > 0.0)) {
        throw std::invalid_argument("--cfl, --theta and --cadence must be positive");
    }
    return s;
}

std::vector<FitResult> fits_for(const std::string& law, const std::vector<LifespanRecord>& records, int dim,
                                double p) {
    std::size_t usable = 0;
    for (const auto& r : records) usable += r.status == "BlewUp" ? 1 : 0;
    if (law == "none") return {};
    if (law != "auto" && law != "critical" && law != "subcritical" && law != "power") {
        throw std::invalid_argument("--fit: unknown law '" + law + "'");
    }
    if (usable < 3) {
        if (law != "auto") throw std::invalid_argument("fit: insufficient data (need 3 BlewUp records)");
        return {};
    }
    std::string chosen = law;
    if (law == "auto") {
        const double critical = 1.0 + 2.0 / dim;
        chosen = std::abs(p - critical) < 1e-12 ? "critical" : (p < critical ? "subcritical" : "power");
    }
    if (chosen == "critical") return {fit_critical(records, dim, false)};
    if (chosen == "subcritical") return {fit_subcritical(records, dim, p)};
    return {fit_power_law(records)};
}

int pde_sweep(const Options& o) {
    ExperimentSpec spec;
    spec.module = ExperimentModule::pde;
    spec.pde = pde_setup(o);
    spec.epsilons = o.list("eps");
    spec.refinement = o.integer("refine");
    spec.workers = o.count("workers");

    std::vector<LifespanRecord> records;
    if (!o.text("dump").empty()) {
        if (spec.epsilons.size() != 1) throw std::invalid_argument("--dump needs exactly one --eps value");
        const RefinedPde ref = refined(spec.pde, spec.refinement);
        const RadialGrid grid = make_grid(spec.pde.dim, spec.pde.t_max, ref.dr, spec.pde.node_budget);
        std::ofstream dump(o.text("dump"), std::ios::binary | std::ios::trunc);
        if (!dump) throw std::runtime_error("cannot open '" + o.text("dump") + "' for writing");
        dump << "t,r,u,v\n";
        const auto sink = [&](const SolutionSnapshot& s) {
            const std::string t = format_double(s.t);
            for (std::size_t i = 0; i < s.u.size(); ++i) {
                dump << t << ',' << format_double(grid.node(i)) << ',' << format_double(s.u[i]) << ','
                     << format_double(s.v[i]) << '\n';
            }
        };
        records.push_back(run_pde_case(spec.pde, spec.epsilons.front(), spec.refinement, sink).record);
        dump.flush();
        if (!dump) throw std::runtime_error("write to '" + o.text("dump") + "' failed");
    } else {
        records = run_experiment(spec);
    }

    const auto fits = fits_for(o.text("fit"), records, spec.pde.dim, spec.pde.p);
    if (o.text("out").empty()) {
        write_records_csv(std::cout, records);
        write_summary(std::cerr, records, fits);
    } else {
        emit_report(records, fits, o.text("out"));
    }
    for (const auto& r : records) {
        if (is_failure(r)) return kExitNumerical;
    }
    return kExitOk;
}

// ------------------------------------------------------------------- ode-sweep

void add_ode_options(Options& o) {
    const OdeParams params;
    const OdeOptions options;
    o.add("alpha", "source exponent alpha (default 2/dim when --dim is given)", format_double(params.alpha));
    o.add("dim", "sets alpha = 2/dim when --alpha is absent");
    o.add("beta", "time-decay exponent of the source", format_double(params.beta));
    o.add("c0", "source coefficient", format_double(params.C0));
    o.add("i0-prime", "initial derivative", format_double(params.I0_prime));
    o.add("eps", "comma-separated initial values I(0)");
    o.add("tol", "local error tolerance at refinement level 0", format_double(options.tol));
    o.add("horizon", "integration horizon", format_double(options.horizon));
    o.add("threshold", "blow-up threshold", format_double(options.blowup_threshold));
    o.add("refine", "refinement level; the tolerance shrinks by 2^level", "0");
    o.add("workers", "concurrent runs", "1");
    o.add_flag("first-order", "integrate the first-order reduction");
    o.add("out", "output CSV path (stdout when omitted)");
}

int ode_sweep(const Options& o) {
    ExperimentSpec spec;
    spec.module = ExperimentModule::ode;
    spec.ode.alpha = o.number("alpha");
    if (o.given("dim") && !o.given("alpha")) {
        const int dim = o.integer("dim");
        if (dim < 1) throw std::invalid_argument("--dim must be at least 1");
        spec.ode.alpha = 2.0 / dim;
    }
    spec.ode.beta = o.number("beta");
    spec.ode.C0 = o.number("c0");
    spec.ode.I0_prime = o.number("i0-prime");
    spec.ode_options.tol = o.number("tol");
    spec.ode_options.horizon = o.number("horizon");
    spec.ode_options.blowup_threshold = o.number("threshold");
    spec.ode_options.first_order = o.flag("first-order");
    spec.epsilons = o.list("eps");
    spec.refinement = o.integer("refine");
    spec.workers = o.count("workers");
    const auto records = run_experiment(spec);
    write_output(o.text("out"), [&](std::ostream& out) {
        out << "epsilon,T,status,steps\n";
        for (const auto& r : records) {
            out << format_double(r.epsilon) << ',' << optional_cell(r.T.has_value(), r.T.value_or(0.0)) << ','
                << r.status << ',' << r.steps << '\n';
        }
    });
    for (const auto& r : records) {
        if (is_failure(r) || r.status == "StepUnderflow") return kExitNumerical;
    }
    return kExitOk;
}

// ----------------------------------------------------------------- functionals

void add_functional_options(Options& o) {
    o.add("in", "snapshot CSV with header t,r,u,v");
    o.add("dim", "spatial dimension of the trace");
    o.add("p", "nonlinearity exponent");
    o.add("eps", "amplitude of the run, the starting value of gamma_tilde");
    o.add("t0", "starting time of gamma_tilde", "0");
    o.add("stride", "evaluate the heat-kernel identity at every stride-th snapshot", "1");
    o.add("out", "output CSV path (stdout when omitted)");
}

int functionals(const Options& o) {
    for (const char* key : {"in", "dim", "p", "eps"}) {
        if (o.text(key).empty()) throw std::invalid_argument(std::string("--") + key + " is required");
    }
    const int dim = o.integer("dim");
    const double p = o.number("p");
    const double eps = o.number("eps");
    const std::size_t stride = o.count("stride");
    if (dim < 1) throw std::invalid_argument("--dim must be at least 1");
    if (!(p > 1.0)) throw std::invalid_argument("--p must exceed 1");
    if (stride == 0) throw std::invalid_argument("--stride must be positive");

    std::ifstream in(o.text("in"), std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read snapshot file '" + o.text("in") + "'");
    const SnapshotFile file = read_snapshots_csv(in, dim);
    if (file.trace.empty()) throw std::invalid_argument("snapshot file holds no snapshots");

    std::vector<double> duhamel_times;
    for (std::size_t k = 0; k < file.trace.size(); k += stride) duhamel_times.push_back(file.trace[k].t);
    const FunctionalTrace ft = evaluate_functionals(file.trace, file.grid, p, duhamel_times);
    for (const auto& w : ft.warnings) std::cerr << "warning: " << w << '\n';
    const GammaTilde gamma = compute_gamma_tilde(ft.times, ft.F, o.number("t0"), eps, p);

    std::map<double, const DuhamelSample*> identity;
    for (const auto& s : ft.duhamel) identity[s.t] = &s;
    std::map<double, double> gamma_at;
    for (std::size_t k = 0; k < gamma.times.size(); ++k) gamma_at[gamma.times[k]] = gamma.values[k];

    write_output(o.text("out"), [&](std::ostream& out) {
        out << "t,G,F,A,B,D,duhamel_residual,gamma_tilde\n";
        for (std::size_t k = 0; k < ft.times.size(); ++k) {
            const double t = ft.times[k];
            out << format_double(t) << ',' << format_double(ft.G[k]) << ',' << format_double(ft.F[k]) << ','
                << format_double(ft.A[k]);
            const auto id = identity.find(t);
            if (id != identity.end()) {
                out << ',' << format_double(id->second->B) << ',' << format_double(id->second->D) << ','
                    << format_double(id->second->residual);
            } else {
                out << ",,,";
            }
            const auto g = gamma_at.find(t);
            out << ',' << (g != gamma_at.end() ? format_double(g->second) : std::string()) << '\n';
        }
    });
    return kExitOk;
}

// ------------------------------------------------------------------------- fit

void add_fit_options(Options& o) {
    o.add("in", "records CSV with header epsilon,T,status,source,dim,p");
    o.add("law", "critical, subcritical, power or auto", "auto");
    o.add("dim", "dimension (default: taken from the records)");
    o.add("p", "exponent (default: taken from the records)");
    o.add_flag("log1p", "regress log(1+T) instead of log T in critical fits");
    o.add("bootstrap", "bootstrap resamples for the constant's interval", "200");
    o.add("seed", "bootstrap seed", "1");
    o.add("out", "summary path (stdout when omitted)");
}

int fit(const Options& o) {
    if (o.text("in").empty()) throw std::invalid_argument("--in is required");
    std::ifstream in(o.text("in"), std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read records file '" + o.text("in") + "'");
    const auto records = read_records_csv(in);
    if (records.empty()) throw std::invalid_argument("fit: insufficient data (no records)");
    const int dim = o.text("dim").empty() ? records.front().dim : o.integer("dim");
    const double p = o.text("p").empty() ? records.front().p : o.number("p");
    const bool log1p = o.flag("log1p");
    std::string law = o.text("law");
    if (law == "auto") {
        if (dim < 1) throw std::invalid_argument("fit: records carry no dimension; pass --law power or --dim");
        const double critical = 1.0 + 2.0 / dim;
        law = std::abs(p - critical) < 1e-12 ? "critical" : (p < critical ? "subcritical" : "power");
    }
    Fitter fitter;
    if (law == "critical") {
        fitter = [dim, log1p](const std::vector<LifespanRecord>& r) { return fit_critical(r, dim, log1p); };
    } else if (law == "subcritical") {
        fitter = [dim, p](const std::vector<LifespanRecord>& r) { return fit_subcritical(r, dim, p); };
    } else if (law == "power") {
        fitter = [](const std::vector<LifespanRecord>& r) { return fit_power_law(r); };
    } else {
        throw std::invalid_argument("--law: unknown law '" + law + "'");
    }
    const FitResult result = fitter(records);
    const auto usable = std::count_if(records.begin(), records.end(),
                                      [](const LifespanRecord& r) { return r.status == "BlewUp"; });
    const std::size_t resamples = o.count("bootstrap");
    const int seed = o.integer("seed");
    write_output(o.text("out"), [&](std::ostream& out) {
        write_summary(out, records, {result});
        out << "[diagnostics]\n";
        if (usable >= 4) {
            out << "leave_one_out_change=" << format_double(leave_one_out_change(records, fitter)) << '\n';
        } else {
            out << "leave_one_out_change=n/a\n";
        }
        if (resamples > 0) {
            const BootstrapInterval ci = bootstrap_fit(records, fitter, resamples, static_cast<std::uint64_t>(seed));
            out << "bootstrap_seed=" << seed << '\n';
            out << "bootstrap_resamples=" << ci.resamples << '\n';
            out << "bootstrap_C_lo=" << format_double(ci.lo) << '\n';
            out << "bootstrap_C_hi=" << format_double(ci.hi) << '\n';
        }
    });
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lifespan experiments for damped semilinear wave equations"};
    app.require_subcommand(1);

    struct Command {
        CLI::App* app;
        std::unique_ptr<Options> options;
        int (*run)(const Options&);
    };
    std::vector<Command> commands;
    const auto add = [&](const char* name, const char* help, void (*declare)(Options&), int (*run)(const Options&)) {
        CLI::App* sub = app.add_subcommand(name, help);
        auto options = std::make_unique<Options>(sub);
        declare(*options);
        commands.push_back({sub, std::move(options), run});
    };
    add("kernel-check", "heat kernel validation suite", add_kernel_options, kernel_check);
    add("pde-sweep", "lifespans of the radial wave equation over an amplitude grid", add_pde_options, pde_sweep);
    add("ode-sweep", "lifespans of the comparison ODE over an initial-value grid", add_ode_options, ode_sweep);
    add("functionals", "test-function functionals along a dumped snapshot trace", add_functional_options,
        functionals);
    add("fit", "fit a lifespan law to a records CSV", add_fit_options, fit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    for (auto& c : commands) {
        if (!c.app->parsed()) continue;
        try {
            c.options->resolve();
            return c.run(*c.options);
        } catch (const NumericalError& e) {
            std::cerr << "numerical failure: " << e.what() << '\n';
            return kExitNumerical;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitInvalid;
        }
    }
    return kExitInvalid;
}
