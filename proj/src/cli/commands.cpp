#include "oed/cli/commands.hpp"

#include "oed/errors.hpp"
#include "oed/rates_diag.hpp"
#include "oed/trace.hpp"
#include "oed/weight_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace oed::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kPointTol = 1e-9;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw InvalidInput("failed writing '" + path.string() + "'");
}

fs::path output_dir(const Experiment& ex) {
    fs::path dir(ex.config.output.directory);
    fs::create_directories(dir);
    return dir;
}

std::optional<std::size_t> find_point(const DesignSpace& space, const Eigen::VectorXd& x) {
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    return space.find(x, kPointTol * scale);
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

double min_sensitivity(const Experiment& ex, const Design& xi) {
    return worst_violator(*ex.space, ex.criterion, info_matrix(*ex.space, xi)).psi;
}

int status_exit_code(RunStatus s) {
    switch (s) {
    case RunStatus::terminated_eps_optimal:
        return 0;
    case RunStatus::iteration_cap:
        return 2;
    default:
        return 1;
    }
}

struct Applicability {
    std::string theorem; // sublinear, linear or empty
    std::string reason;
};

// Hypotheses of the convergence-rate theorems for the configured run.
Applicability rate_hypotheses(const Experiment& ex) {
    const auto& al = ex.config.algorithm;
    const auto& spec = ex.criterion;
    const auto& s = al.schedule;
    auto unmet = [](std::string why) { return Applicability{"", std::move(why)}; };
    if (al.variant == "vertex_direction") return unmet("the rate theorems cover the adaptive strict variants only");
    if (!is_strict(variant_from_string(al.variant))) return unmet("the rate theorems need a strict variant");
    if (!spec.smooth()) return unmet("criterion " + spec.name() + " is not smooth");
    if (!spec.two_stage || !(spec.two_stage->alpha > 0) || !is_pd(spec.two_stage->m0, default_pd_tol(spec.two_stage->m0)))
        return unmet("the rate theorems need a two-stage criterion with alpha > 0 and positive definite M0");
    if (s.bar_rule == ToleranceSchedule::BarRule::constant || s.under_rule == ToleranceSchedule::UnderRule::constant)
        return unmet("the sublinear theorem needs decaying or zero subproblem tolerances");
    const bool zero_tols =
        s.bar_rule == ToleranceSchedule::BarRule::zero && s.under_rule == ToleranceSchedule::UnderRule::zero;
    const bool sc_family = spec.family == Family::TildeP || spec.family == Family::D;
    const std::string& want = ex.config.rates.theorem;
    if (want == "linear") {
        if (!zero_tols) return unmet("the linear theorem needs zero subproblem tolerances");
        if (!sc_family) return unmet("the linear theorem needs a strongly convex criterion (TildeP or D)");
        return {"linear", ""};
    }
    if (want == "sublinear") return {"sublinear", ""};
    if (zero_tols && sc_family) return {"linear", ""};
    return {"sublinear", ""};
}

void check_trace_matches(const Experiment& ex, const RunTrace& trace) {
    const std::size_t n = ex.space->size();
    if (trace.records.empty()) throw InvalidInput("trace has no iterations");
    const bool vertex = ex.config.algorithm.variant == "vertex_direction";
    const std::size_t expect0 = vertex ? n : ex.x0.size();
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const auto& r = trace.records[i];
        if (r.k != static_cast<int>(i)) throw InvalidInput("trace iterations are not numbered 0, 1, 2, ...");
        if (r.violator >= static_cast<long>(n))
            throw InvalidInput("trace violator index " + std::to_string(r.violator) + " is outside the design space");
        if (r.n_active > n || r.n_support > r.n_active)
            throw InvalidInput("trace set sizes at k = " + std::to_string(r.k) + " do not fit the design space");
    }
    if (trace.records.front().n_active != expect0)
        throw InvalidInput("trace starts with " + std::to_string(trace.records.front().n_active) +
                           " active points, config gives " + std::to_string(expect0));
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

Experiment prepare(ExperimentConfig config, const CommandOptions& options) {
    if (options.out) config.output.directory = *options.out;
    if (options.seed) config.algorithm.seed = *options.seed;
    if (options.threads) {
        if (*options.threads < 1) throw InvalidInput("--threads must be >= 1");
        config.output.threads = *options.threads;
    }
    Experiment ex;
    ex.config = config;
    ex.model = make_model(config.model.name, config.model.constants);
    const Model& model = *ex.model.model;
    if (static_cast<int>(config.grid.size()) != model.d_x())
        throw InvalidInput("config /grid: model " + config.model.name + " has " + std::to_string(model.d_x()) +
                           " inputs, grid has " + std::to_string(config.grid.size()) + " axes");
    if (config.model.theta_bar) {
        const auto& t = *config.model.theta_bar;
        if (static_cast<int>(t.size()) != model.d_theta())
            throw InvalidInput("config /model/theta_bar: expected " + std::to_string(model.d_theta()) + " values");
        ex.theta_bar = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
    } else {
        if (ex.model.default_theta_bar.size() != model.d_theta())
            throw InvalidInput("config /model/theta_bar: required for model " + config.model.name);
        ex.theta_bar = ex.model.default_theta_bar;
    }
    NoiseSpec noise = NoiseSpec::identity(model.d_y());
    if (config.model.noise_covariance) {
        const auto& c = *config.model.noise_covariance;
        if (c.rows() != model.d_y() || c.cols() != model.d_y())
            throw InvalidInput("config /model/noise_covariance: expected a " + std::to_string(model.d_y()) + " x " +
                               std::to_string(model.d_y()) + " matrix");
        noise = NoiseSpec(SymMatrix(c));
    }
    ex.criterion = criterion_from_json(config.criterion_json, model.d_theta());

    std::vector<GridAxis> axes;
    for (const auto& a : config.grid) axes.push_back(a.axis);
    BuildOptions bo;
    bo.atom.h_rel = config.model.h_rel;
    bo.atom.scaling = config.model.scaling;
    bo.threads = config.output.threads;
    ex.space.emplace(build_atoms(model, noise, make_grid(axes), ex.theta_bar, bo));

    const auto names = model.input_names();
    for (std::size_t i = 0; i < config.grid.size(); ++i) {
        const bool default_name = config.grid[i].name == "x" + std::to_string(i + 1);
        ex.input_names.push_back(default_name && i < names.size() ? names[i] : config.grid[i].name);
    }

    std::vector<std::size_t> x0;
    switch (config.algorithm.x0.kind) {
    case X0Block::Kind::all:
        for (std::size_t i = 0; i < ex.space->size(); ++i) x0.push_back(i);
        break;
    case X0Block::Kind::corners:
        for (const auto& c : grid_corners(axes)) {
            const auto idx = find_point(*ex.space, c);
            if (!idx) throw NumericFailure("grid corner not found among grid points");
            x0.push_back(*idx);
        }
        break;
    case X0Block::Kind::points:
        for (std::size_t i = 0; i < config.algorithm.x0.points.size(); ++i) {
            const auto& p = config.algorithm.x0.points[i];
            const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
            const auto idx = find_point(*ex.space, x);
            if (!idx) throw InvalidInput("config /algorithm/X0/" + std::to_string(i) + ": point is not on the grid");
            x0.push_back(*idx);
        }
        break;
    }
    std::sort(x0.begin(), x0.end());
    x0.erase(std::unique(x0.begin(), x0.end()), x0.end());
    ex.x0 = std::move(x0);
    return ex;
}

json Experiment::effective() const {
    json j = config.effective();
    j["model"]["constants"] = model.effective_constants;
    j["model"]["theta_bar"] = to_std(theta_bar);
    return j;
}

json design_json(const Experiment& ex, const Design& xi) {
    const SymMatrix m = info_matrix(*ex.space, xi);
    const ExtReal value = eval(ex.criterion, m);
    json support = json::array();
    for (const auto& e : xi.entries())
        support.push_back({{"index", e.index}, {"x", to_std(ex.space->point(e.index))}, {"weight", e.weight}});
    json out = {{"schema_version", kSchemaVersion},
                {"criterion", ex.criterion.name()},
                {"inputs", ex.input_names},
                {"support", support},
                {"value", is_finite_value(value) ? json(value) : json("inf")}};
    if (is_finite_value(value) && ex.criterion.smooth()) out["min_sensitivity"] = min_sensitivity(ex, xi);
    return out;
}

std::string design_csv(const Experiment& ex, const Design& xi) {
    std::string out;
    for (const auto& n : ex.input_names) out += n + ",";
    out += "weight\n";
    for (const auto& e : xi.entries()) {
        const auto& x = ex.space->point(e.index);
        for (Eigen::Index i = 0; i < x.size(); ++i) out += format_double(x(i)) + ",";
        out += fixed6(e.weight) + "\n";
    }
    return out;
}

Design load_design(const Experiment& ex, const std::string& path) {
    const std::string text = read_file(path);
    std::vector<std::pair<Eigen::VectorXd, double>> rows;
    const auto dx = static_cast<Eigen::Index>(ex.config.grid.size());
    const bool is_json = text.find_first_not_of(" \t\r\n") != std::string::npos &&
                         text[text.find_first_not_of(" \t\r\n")] == '{';
    if (is_json) {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw InvalidInput("design " + path + ": " + e.what());
        }
        if (!j.contains("support") || !j["support"].is_array())
            throw InvalidInput("design " + path + ": missing support array");
        for (const auto& s : j["support"]) {
            if (!s.contains("x") || !s.contains("weight")) throw InvalidInput("design " + path + ": entries need x and weight");
            const auto x = s["x"].get<std::vector<double>>();
            if (static_cast<Eigen::Index>(x.size()) != dx)
                throw InvalidInput("design " + path + ": point dimension does not match the grid");
            rows.emplace_back(Eigen::Map<const Eigen::VectorXd>(x.data(), dx), s["weight"].get<double>());
        }
    } else {
        std::istringstream in(text);
        std::string line;
        std::getline(in, line);
        int lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            std::vector<double> vals;
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) {
                try {
                    std::size_t used = 0;
                    vals.push_back(std::stod(cell, &used));
                    if (used != cell.size()) throw std::invalid_argument(cell);
                } catch (const std::exception&) {
                    throw InvalidInput("design " + path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
                }
            }
            if (static_cast<Eigen::Index>(vals.size()) != dx + 1)
                throw InvalidInput("design " + path + ":" + std::to_string(lineno) + ": expected " +
                                   std::to_string(dx + 1) + " columns");
            rows.emplace_back(Eigen::Map<const Eigen::VectorXd>(vals.data(), dx), vals.back());
        }
    }
    if (rows.empty()) throw InvalidInput("design " + path + ": no support points");
    std::vector<Design::Entry> entries;
    for (const auto& [x, w] : rows) {
        const auto idx = find_point(*ex.space, x);
        if (!idx) {
            std::string s;
            for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? ", " : "") + format_double(x(i));
            throw InvalidInput("design point (" + s + ") is not on the grid");
        }
        entries.push_back({*idx, w});
    }
    return Design(std::move(entries));
}

int cmd_run(const CommandOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        Experiment ex = prepare(load_config(options.config), options);
        const auto& al = ex.config.algorithm;
        const DesignSpace& space = *ex.space;
        Design design;
        RunTrace trace;
        if (al.variant == "vertex_direction") {
            auto r = vertex_direction(space, ex.criterion, al.schedule.eps, al.caps.max_outer,
                                      Design::uniform(ex.x0), al.vertex_step);
            design = std::move(r.design);
            trace = std::move(r.trace);
        } else {
            RunOptions ro;
            ro.solver = al.solver;
            ro.literal_update = al.literal_update;
            if (al.seeded_scan) ro.scan_order = seeded_permutation(space.size(), al.seed);
            auto r = run(space, ex.criterion, variant_from_string(al.variant), ex.x0, al.schedule, al.caps, ro);
            design = std::move(r.design);
            trace = std::move(r.trace);
        }
        const fs::path dir = output_dir(ex);
        const bool timings = ex.config.output.timings;
        write_file(dir / "effective-config.json", ex.effective().dump(2) + "\n");
        write_file(dir / "trace.csv", to_csv(trace, timings));
        write_file(dir / "trace.json", to_json(trace, timings).dump(2) + "\n");
        if (!design.empty()) {
            json dj = design_json(ex, design);
            dj["status"] = to_string(trace.status());
            dj["iterations"] = trace.records.size();
            write_file(dir / "design.json", dj.dump(2) + "\n");
            write_file(dir / "design.csv", design_csv(ex, design));
        }
        out << "status: " << to_string(trace.status()) << "\n";
        out << "iterations: " << trace.records.size() << "\n";
        if (!trace.records.empty()) out << "criterion: " << format_double(trace.records.back().psi) << "\n";
        if (trace.final_min_sensitivity) out << "min sensitivity: " << format_double(*trace.final_min_sensitivity) << "\n";
        out << "support points: " << design.size() << "\n";
        out << "output: " << dir.string() << "\n";
        if (trace.status() == RunStatus::infeasible) err << "error: no feasible start on X0\n";
        return status_exit_code(trace.status());
    });
}

int cmd_certify(const CommandOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!options.design) throw InvalidInput("certify needs --design");
        Experiment ex = prepare(load_config(options.config), options);
        const Design xi = load_design(ex, *options.design);
        const SymMatrix m = info_matrix(*ex.space, xi);
        const ExtReal value = eval(ex.criterion, m);
        out << "criterion: " << ex.criterion.name() << "\n";
        out << "Psi: " << format_double(value) << "\n";
        if (!is_finite_value(value)) {
            out << "design is singular for this criterion; no finite certificate\n";
            return 0;
        }
        if (!ex.criterion.smooth()) {
            out << "criterion is not smooth; sensitivity certificate unavailable\n";
            return 0;
        }
        const Violator v = worst_violator(*ex.space, ex.criterion, m);
        out << "min psi: " << format_double(v.psi) << "\n";
        out << "eps: " << format_double(std::max(0.0, -v.psi)) << "\n";
        return 0;
    });
}

int cmd_reduce(const CommandOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!options.design) throw InvalidInput("reduce needs --design");
        Experiment ex = prepare(load_config(options.config), options);
        const Design xi = load_design(ex, *options.design);
        const Design reduced = caratheodory_reduce(*ex.space, xi);
        const double dev = frob_norm(info_matrix(*ex.space, reduced) - info_matrix(*ex.space, xi));
        const fs::path dir = output_dir(ex);
        write_file(dir / "design-reduced.json", design_json(ex, reduced).dump(2) + "\n");
        write_file(dir / "design-reduced.csv", design_csv(ex, reduced));
        out << "support before: " << xi.size() << "\n";
        out << "support after: " << reduced.size() << "\n";
        out << "bound: " << caratheodory_bound(ex.space->dim()) << "\n";
        out << "matrix deviation: " << format_double(dev) << "\n";
        out << "output: " << dir.string() << "\n";
        return 0;
    });
}

int cmd_rates(const CommandOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!options.trace) throw InvalidInput("rates needs --trace");
        Experiment ex = prepare(load_config(options.config), options);
        const RunTrace trace = trace_from_csv(read_file(*options.trace));
        check_trace_matches(ex, trace);
        const DesignSpace& space = *ex.space;
        const auto& sched = ex.config.algorithm.schedule;

        Applicability app{"", "rate checking disabled by configuration"};
        if (ex.config.rates.theorem != "none") app = rate_hypotheses(ex);

        RateReport rep;
        if (ex.criterion.smooth()) {
            rep = estimate_constants(ex.criterion, space.atoms(), ex.config.rates.samples, ex.config.algorithm.seed);
        } else {
            rep.diam = diameter(space.atoms());
        }
        rep.tol = ex.config.rates.tol;
        rep.theorem = app.theorem;
        rep.hypotheses_satisfied = !app.theorem.empty();
        if (!rep.hypotheses_satisfied) {
            rep.note = "hypotheses not satisfied: " + app.reason;
        } else {
            const ReferenceOptimum ref = reference_optimum(space, ex.criterion);
            std::vector<double> h;
            for (const auto& r : trace.records) h.push_back(r.psi - ref.value);
            const int k_max = static_cast<int>(h.size()) - 1;
            std::vector<int> ks;
            std::vector<double> actual, bound;
            if (app.theorem == "sublinear") {
                const double c_bar =
                    sched.bar_rule == ToleranceSchedule::BarRule::quadratic_decay ? sched.bar_c : 0.0;
                const double c_under =
                    sched.under_rule == ToleranceSchedule::UnderRule::harmonic_decay ? sched.under_c : 0.0;
                if (k_max >= 2) {
                    const auto curve = sublinear_bound_curve(h[1], rep.L_est, rep.diam, c_bar, c_under, k_max);
                    for (int k = 2; k <= k_max; ++k) {
                        ks.push_back(k);
                        actual.push_back(h[static_cast<std::size_t>(k)]);
                        bound.push_back(curve[static_cast<std::size_t>(k - 2)]);
                    }
                }
            } else {
                const double ratio = rep.C_Psi_M_est > 0 ? rep.mu_Psi_M_est / rep.C_Psi_M_est : 0.0;
                if (ratio > 0) {
                    std::optional<PwidthInputs> pw;
                    try {
                        rep.pwidth = pwidth_bruteforce(space.atoms());
                        pw = PwidthInputs{rep.mu_est, rep.L_est, *rep.pwidth, rep.diam};
                    } catch (const UnsupportedSize&) {
                    }
                    const LinearBound lb = linear_bound_curve(h[0], ratio, k_max, pw);
                    rep.r = lb.r;
                    rep.r_pwidth = lb.r_pwidth;
                    for (int k = 0; k <= k_max; ++k) {
                        ks.push_back(k);
                        actual.push_back(h[static_cast<std::size_t>(k)]);
                        bound.push_back(lb.curve[static_cast<std::size_t>(k)]);
                    }
                } else {
                    rep.note = "no positive curvature ratio observed in the samples; linear bound not checked";
                }
            }
            check_bound(rep, ks, actual, bound, ex.config.rates.tol);
        }
        const fs::path dir = output_dir(ex);
        write_file(dir / "rates.json", to_json(rep).dump(2) + "\n");
        write_file(dir / "bounds.csv", bound_csv(rep));
        out << "theorem: " << (rep.theorem.empty() ? "none" : rep.theorem) << "\n";
        if (!rep.hypotheses_satisfied) out << rep.note << "\n";
        if (rep.r) out << "r: " << format_double(*rep.r) << "\n";
        if (rep.r_pwidth) out << "r (pyramidal width): " << format_double(*rep.r_pwidth) << "\n";
        out << "checks: " << rep.checks.size() << "\n";
        if (!rep.violations.empty()) {
            out << "violations at k =";
            for (int k : rep.violations) out << " " << k;
            out << "\n";
            return 3;
        }
        out << "violations: none\n";
        return 0;
    });
}

} // namespace oed::cli
