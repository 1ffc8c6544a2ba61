#include "lifespan/lifespan_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lifespan/text_format.hpp"

namespace lifespan {

std::string_view source_name(RecordSource source) { return source == RecordSource::pde ? "pde" : "ode"; }

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

struct Line {
    double slope;
    double intercept;
    double r2;
    std::vector<double> residuals;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit: abscissae are all equal");
    Line out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (out.intercept + out.slope * x[i]);
        out.residuals.push_back(e);
        ss += e * e;
    }
    out.r2 = syy > 0.0 ? std::clamp(1.0 - ss / syy, 0.0, 1.0) : 1.0;
    return out;
}

std::vector<const LifespanRecord*> usable(const std::vector<LifespanRecord>& records) {
    std::vector<const LifespanRecord*> out;
    for (const auto& r : records) {
        if (r.status == "BlewUp" && r.T && *r.T > 0.0 && r.epsilon > 0.0) out.push_back(&r);
    }
    if (out.size() < 3) {
        throw std::invalid_argument("fit: insufficient data (" + std::to_string(out.size()) +
                                    " BlewUp records, need 3)");
    }
    return out;
}

FitResult log_log_fit(const std::vector<LifespanRecord>& records, FitLaw law) {
    std::vector<double> x, y;
    for (const auto* r : usable(records)) {
        x.push_back(std::log(r->epsilon));
        y.push_back(std::log(*r->T));
    }
    const Line line = least_squares(x, y);
    FitResult fit;
    fit.law = law;
    fit.exponent = line.slope;
    fit.offset = line.intercept;
    fit.C = std::exp(line.intercept);
    fit.r2 = line.r2;
    fit.residuals = line.residuals;
    fit.points = x.size();
    fit.theoretical_exponent = std::numeric_limits<double>::quiet_NaN();
    return fit;
}

std::string level_note(const RefinedPde& r) {
    return "dr=" + format_double(r.dr) + " dt0=" + format_double(r.dt0) + " cadence=" + format_double(r.cadence);
}

}  // namespace

RefinedPde refined(const PdeSetup& setup, int level) {
    if (level < 0 || level > 10) throw std::invalid_argument("refinement level must lie in [0, 10]");
    if (!(setup.dr > 0.0)) throw std::invalid_argument("dr must be positive");
    const double factor = std::ldexp(1.0, -level);
    const double dt0 = setup.dt0 > 0.0 ? setup.dt0 : setup.solver.cfl * setup.dr;
    return {setup.dr * factor, dt0 * factor, setup.solver.snapshot_cadence * factor};
}

PdeCase run_pde_case(const PdeSetup& setup, double epsilon, int level,
                     const std::function<void(const SolutionSnapshot&)>& sink) {
    const RefinedPde ref = refined(setup, level);
    const RadialGrid grid = make_grid(setup.dim, setup.t_max, ref.dr, setup.node_budget);
    auto [f, g] = sample_initial_profiles(setup.profile, grid, setup.velocity_scale);
    const ProblemSpec spec{setup.dim, setup.p, epsilon, std::move(f), std::move(g), setup.t_max, true};
    spec.validate();
    SolverConfig cfg = setup.solver;
    cfg.snapshot_cadence = ref.cadence;
    cfg.keep_snapshots = false;
    cfg.snapshot_sink = sink;

    PdeCase out;
    LifespanRecord& rec = out.record;
    rec.epsilon = epsilon;
    rec.source = RecordSource::pde;
    rec.dim = setup.dim;
    rec.p = setup.p;
    rec.refinement = level;
    rec.dr = ref.dr;
    rec.dt0 = ref.dt0;
    try {
        RunResult r = run(spec, grid, ref.dt0, cfg);
        out.report = r.report;
        rec.status = std::string(status_name(r.report.status));
        if (r.report.status == BlowupStatus::BlewUp) rec.T = r.report.t_est;
        rec.steps = r.steps;
        rec.note = level_note(ref) + " last_time=" + format_double(r.report.last_time);
    } catch (const NumericalError& e) {
        rec.status = "NumericalError";
        rec.note = e.what();
    }
    return out;
}

std::size_t flag_monotonicity_violations(std::vector<LifespanRecord>& records) {
    std::sort(records.begin(), records.end(),
              [](const LifespanRecord& a, const LifespanRecord& b) { return a.epsilon > b.epsilon; });
    std::size_t flagged = 0;
    double longest = -1.0;
    for (auto& r : records) {
        if (r.status != "BlewUp" || !r.T) continue;
        if (*r.T < longest) {
            r.status = "NonMonotone";
            r.note += r.note.empty() ? "" : " ";
            r.note += "lifespan below that of a larger epsilon";
            ++flagged;
        } else {
            longest = *r.T;
        }
    }
    return flagged;
}

std::vector<LifespanRecord> run_experiment(const ExperimentSpec& spec) {
    std::vector<double> eps = spec.epsilons;
    for (double e : eps) {
        if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument("experiment: epsilon values must be positive");
    }
    std::sort(eps.begin(), eps.end(), std::greater<>());
    if (eps.empty()) return {};

    std::vector<LifespanRecord> records(eps.size());
    std::function<LifespanRecord(double)> one;
    if (spec.module == ExperimentModule::pde) {
        // configuration errors surface here, before any worker starts
        const RefinedPde ref = refined(spec.pde, spec.refinement);
        (void)make_grid(spec.pde.dim, spec.pde.t_max, ref.dr, spec.pde.node_budget);
        (void)parse_shape(spec.pde.profile);
        if (!(spec.pde.p > 1.0)) throw std::invalid_argument("experiment: p must exceed 1");
        if (ref.dt0 > spec.pde.solver.cfl * ref.dr * (1.0 + 1e-12)) {
            throw std::invalid_argument("experiment: dt0 violates the CFL bound");
        }
        one = [&](double e) { return run_pde_case(spec.pde, e, spec.refinement).record; };
    } else {
        spec.ode.validate();
        OdeOptions opts = spec.ode_options;
        opts.tol = std::ldexp(opts.tol, -spec.refinement);
        one = [&spec, opts](double e) {
            LifespanRecord r = sweep(spec.ode, {e}, opts).front();
            r.refinement = spec.refinement;
            r.dt0 = opts.tol;
            return r;
        };
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < eps.size(); i = next.fetch_add(1)) {
            try {
                records[i] = one(eps[i]);
            } catch (const std::exception& e) {
                LifespanRecord r;
                r.epsilon = eps[i];
                r.status = "Error";
                r.source = spec.module == ExperimentModule::pde ? RecordSource::pde : RecordSource::ode;
                r.refinement = spec.refinement;
                r.note = e.what();
                records[i] = std::move(r);
            }
        }
    };
    const std::size_t count = std::clamp<std::size_t>(spec.workers, 1, eps.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < count; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    flag_monotonicity_violations(records);
    return records;
}

std::string_view law_name(FitLaw law) {
    switch (law) {
        case FitLaw::critical: return "critical";
        case FitLaw::subcritical: return "subcritical";
        case FitLaw::power: return "power";
    }
    return "unknown";
}

FitResult fit_critical(const std::vector<LifespanRecord>& records, int dim, bool use_log1p) {
    if (dim < 1) throw std::invalid_argument("fit_critical: dimension must be positive");
    const double power = -2.0 / dim;
    std::vector<double> x, y;
    for (const auto* r : usable(records)) {
        x.push_back(std::pow(r->epsilon, power));
        y.push_back(use_log1p ? std::log1p(*r->T) : std::log(*r->T));
    }
    const Line line = least_squares(x, y);
    FitResult fit;
    fit.law = FitLaw::critical;
    fit.C = line.slope;
    fit.offset = line.intercept;
    fit.exponent = power;
    fit.theoretical_exponent = power;
    fit.r2 = line.r2;
    fit.residuals = line.residuals;
    fit.points = x.size();
    fit.log1p = use_log1p;
    return fit;
}

FitResult fit_subcritical(const std::vector<LifespanRecord>& records, int dim, double p) {
    if (dim < 1) throw std::invalid_argument("fit_subcritical: dimension must be positive");
    if (!(p > 1.0) || p >= 1.0 + 2.0 / dim) {
        throw std::invalid_argument("fit_subcritical: requires 1 < p < 1 + 2/n");
    }
    FitResult fit = log_log_fit(records, FitLaw::subcritical);
    fit.theoretical_exponent = -1.0 / (1.0 / (p - 1.0) - 0.5 * dim);
    return fit;
}

FitResult fit_power_law(const std::vector<LifespanRecord>& records) { return log_log_fit(records, FitLaw::power); }

double leave_one_out_change(const std::vector<LifespanRecord>& records, const Fitter& fitter) {
    const auto usable = std::count_if(records.begin(), records.end(),
                                      [](const LifespanRecord& r) { return r.status == "BlewUp"; });
    if (usable < 4) throw std::invalid_argument("leave_one_out_change: insufficient data (need 4 BlewUp records)");
    const double full = fitter(records).C;
    double worst = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].status != "BlewUp") continue;
        std::vector<LifespanRecord> rest;
        for (std::size_t j = 0; j < records.size(); ++j) {
            if (j != i) rest.push_back(records[j]);
        }
        worst = std::max(worst, std::abs(fitter(rest).C - full) / std::abs(full));
    }
    return worst;
}

BootstrapInterval bootstrap_fit(const std::vector<LifespanRecord>& records, const Fitter& fitter,
                                std::size_t resamples, std::uint64_t seed) {
    std::vector<LifespanRecord> pool;
    for (const auto& r : records) {
        if (r.status == "BlewUp") pool.push_back(r);
    }
    if (pool.size() < 3) throw std::invalid_argument("bootstrap_fit: insufficient data");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<double> cs;
    for (std::size_t k = 0; k < resamples; ++k) {
        std::vector<LifespanRecord> sample;
        for (std::size_t i = 0; i < pool.size(); ++i) sample.push_back(pool[pick(rng)]);
        try {
            cs.push_back(fitter(sample).C);
        } catch (const std::invalid_argument&) {
            // degenerate resample (repeated abscissae)
        }
    }
    if (cs.empty()) throw std::invalid_argument("bootstrap_fit: every resample was degenerate");
    std::sort(cs.begin(), cs.end());
    const auto at = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(cs.size() - 1)));
        return cs[idx];
    };
    return {at(0.025), at(0.975), cs.size()};
}

void write_records_csv(std::ostream& out, const std::vector<LifespanRecord>& records) {
    out << "epsilon,T,status,source,dim,p\n";
    for (const auto& r : records) {
        out << format_double(r.epsilon) << ',' << (r.T ? format_double(*r.T) : std::string()) << ',' << r.status
            << ',' << source_name(r.source) << ',' << r.dim << ',' << format_double(r.p) << '\n';
    }
}

std::vector<LifespanRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "epsilon,T,status,source,dim,p") {
        throw std::invalid_argument("records CSV: expected header epsilon,T,status,source,dim,p");
    }
    std::vector<LifespanRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto fields = split_fields(body);
        const std::string where = "records CSV line " + std::to_string(line_no);
        if (fields.size() != 6) throw std::invalid_argument(where + ": expected 6 fields");
        LifespanRecord r;
        try {
            r.epsilon = parse_double(fields[0]);
            if (!fields[1].empty()) r.T = parse_double(fields[1]);
            r.p = parse_double(fields[5]);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + ": " + e.what());
        }
        r.status = std::string(fields[2]);
        if (fields[3] == "pde") {
            r.source = RecordSource::pde;
        } else if (fields[3] == "ode") {
            r.source = RecordSource::ode;
        } else {
            throw std::invalid_argument(where + ": unknown source '" + std::string(fields[3]) + "'");
        }
        const std::string dim(fields[4]);
        std::size_t used = 0;
        try {
            r.dim = std::stoi(dim, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (dim.empty() || used != dim.size()) throw std::invalid_argument(where + ": bad dim '" + dim + "'");
        out.push_back(std::move(r));
    }
    return out;
}

void write_summary(std::ostream& out, const std::vector<LifespanRecord>& records, const std::vector<FitResult>& fits) {
    out << "[records]\n";
    out << "count=" << records.size() << '\n';
    std::size_t blew = 0;
    for (const auto& r : records) blew += r.status == "BlewUp" ? 1 : 0;
    out << "blew_up=" << blew << '\n';
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        out << "record." << i << "=epsilon:" << format_double(r.epsilon) << " refinement:" << r.refinement
            << " dr:" << format_double(r.dr) << " dt0:" << format_double(r.dt0) << " steps:" << r.steps;
        if (!r.note.empty()) out << " note:" << r.note;
        out << '\n';
    }
    for (std::size_t k = 0; k < fits.size(); ++k) {
        const FitResult& f = fits[k];
        out << "[fit." << k << "]\n";
        out << "law=" << law_name(f.law) << '\n';
        out << "ordinate=" << (f.log1p ? "log(1+T)" : "log(T)") << '\n';
        out << "C=" << format_double(f.C) << '\n';
        out << "offset=" << format_double(f.offset) << '\n';
        out << "exponent=" << format_double(f.exponent) << '\n';
        out << "theoretical_exponent=" << format_double(f.theoretical_exponent) << '\n';
        out << "r2=" << format_double(f.r2) << '\n';
        out << "points=" << f.points << '\n';
        out << "residuals=";
        for (std::size_t i = 0; i < f.residuals.size(); ++i) {
            out << (i ? "," : "") << format_double(f.residuals[i]);
        }
        out << '\n';
    }
}

std::string summary_path(const std::string& csv_path) { return csv_path + ".summary.txt"; }

void emit_report(const std::vector<LifespanRecord>& records, const std::vector<FitResult>& fits,
                 const std::string& path) {
    const auto write = [](const std::string& target, const std::function<void(std::ostream&)>& body) {
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + target + "' for writing");
        body(out);
        out.flush();
        if (!out) throw std::runtime_error("write to '" + target + "' failed");
    };
    write(path, [&](std::ostream& o) { write_records_csv(o, records); });
    write(summary_path(path), [&](std::ostream& o) { write_summary(o, records, fits); });
}

std::map<std::string, std::string> parse_config(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
        }
        std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        out[std::move(key)] = trim(std::string_view(body).substr(eq + 1));
    }
    return out;
}

}  // namespace lifespan
