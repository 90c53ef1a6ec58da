#include "oed/cli/config.hpp"

#include "oed/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace oed::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw InvalidInput("config " + (path.empty() ? std::string("/") : path) + ": " + msg);
}

const char* type_name(const json& j) { return j.type_name(); }

// Reads keys of one JSON object and rejects the ones never read.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, std::string("expected an object, found ") + type_name(j_));
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) fail(child(key), "required key is missing");
        return j_.at(key);
    }

    std::string child(const std::string& key) const { return path_ + "/" + key; }

    double number(const std::string& key, std::optional<double> def = std::nullopt) {
        if (!has(key)) {
            if (def) return *def;
            fail(child(key), "required number is missing");
        }
        const json& v = j_.at(key);
        if (!v.is_number()) fail(child(key), std::string("expected a number, found ") + type_name(v));
        return v.get<double>();
    }

    long integer(const std::string& key, std::optional<long> def = std::nullopt) {
        if (!has(key)) {
            if (def) return *def;
            fail(child(key), "required integer is missing");
        }
        const json& v = j_.at(key);
        if (!v.is_number_integer()) fail(child(key), std::string("expected an integer, found ") + type_name(v));
        return v.get<long>();
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long>() < 0))
            fail(child(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool def) {
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_boolean()) fail(child(key), std::string("expected true or false, found ") + type_name(v));
        return v.get<bool>();
    }

    std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) {
        if (!has(key)) {
            if (def) return *def;
            fail(child(key), "required string is missing");
        }
        const json& v = j_.at(key);
        if (!v.is_string()) fail(child(key), std::string("expected a string, found ") + type_name(v));
        return v.get<std::string>();
    }

    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key)) fail(child(key), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<double> number_list(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, std::string("expected an array of numbers, found ") + type_name(j));
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) fail(path + "/" + std::to_string(i), "expected a number");
        out.push_back(j[i].get<double>());
    }
    return out;
}

Eigen::MatrixXd matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXd m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::string rp = path + "/" + std::to_string(r);
        const auto row = number_list(j[static_cast<std::size_t>(r)], rp);
        if (r == 0) {
            if (row.empty()) fail(rp, "rows must be non-empty");
            m.resize(rows, static_cast<Eigen::Index>(row.size()));
        }
        if (static_cast<Eigen::Index>(row.size()) != m.cols()) fail(rp, "rows must have equal length");
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

// Square symmetric matrix, "identity", or a scalar multiple of the identity.
SymMatrix sym_matrix(const json& j, int d, const std::string& path) {
    if (j.is_string()) {
        if (j.get<std::string>() != "identity") fail(path, "expected a matrix, a number or \"identity\"");
        return SymMatrix::identity(std::max(d, 1));
    }
    if (j.is_number()) return SymMatrix::identity(std::max(d, 1)) * j.get<double>();
    const Eigen::MatrixXd m = matrix(j, path);
    if (m.rows() != m.cols()) fail(path, "expected a square matrix");
    if (d > 0 && m.rows() != d) fail(path, "expected a " + std::to_string(d) + " x " + std::to_string(d) + " matrix");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        fail(path, "matrix must be symmetric");
    return SymMatrix(m);
}

ToleranceSchedule::BarRule bar_rule(const std::string& s, const std::string& path) {
    if (s == "zero") return ToleranceSchedule::BarRule::zero;
    if (s == "constant") return ToleranceSchedule::BarRule::constant;
    if (s == "quadratic_decay") return ToleranceSchedule::BarRule::quadratic_decay;
    fail(path, "unknown rule '" + s + "' (zero, constant, quadratic_decay)");
}

ToleranceSchedule::UnderRule under_rule(const std::string& s, const std::string& path) {
    if (s == "zero") return ToleranceSchedule::UnderRule::zero;
    if (s == "constant") return ToleranceSchedule::UnderRule::constant;
    if (s == "harmonic_decay") return ToleranceSchedule::UnderRule::harmonic_decay;
    fail(path, "unknown rule '" + s + "' (zero, constant, harmonic_decay)");
}

std::string bar_name(ToleranceSchedule::BarRule r) {
    switch (r) {
    case ToleranceSchedule::BarRule::zero:
        return "zero";
    case ToleranceSchedule::BarRule::constant:
        return "constant";
    case ToleranceSchedule::BarRule::quadratic_decay:
        return "quadratic_decay";
    }
    return "?";
}

std::string under_name(ToleranceSchedule::UnderRule r) {
    switch (r) {
    case ToleranceSchedule::UnderRule::zero:
        return "zero";
    case ToleranceSchedule::UnderRule::constant:
        return "constant";
    case ToleranceSchedule::UnderRule::harmonic_decay:
        return "harmonic_decay";
    }
    return "?";
}

json normalize_criterion(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    json out;
    const std::string name = r.string("name");
    out["name"] = name;
    if (name == "Sum") {
        const json& terms = r.at("terms");
        if (!terms.is_array() || terms.empty()) fail(r.child("terms"), "expected a non-empty array");
        out["terms"] = json::array();
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const std::string tp = r.child("terms") + "/" + std::to_string(i);
            ObjectReader t(terms[i], tp);
            const double w = t.number("weight");
            if (!(w >= 0)) fail(t.child("weight"), "must be >= 0");
            const json c = normalize_criterion(t.at("criterion"), t.child("criterion"));
            t.finish();
            out["terms"].push_back({{"weight", w}, {"criterion", c}});
        }
    } else {
        try {
            (void)CriterionSpec::from_name(name);
        } catch (const InvalidInput& e) {
            fail(r.child("name"), e.what());
        }
    }
    if (r.has("Q")) out["Q"] = matrix_json(matrix(r.at("Q"), r.child("Q")));
    if (r.has("W")) {
        const json& w = r.at("W");
        out["W"] = w.is_array() ? matrix_json(matrix(w, r.child("W"))) : w;
    }
    if (r.has("two_stage")) {
        ObjectReader t(r.at("two_stage"), r.child("two_stage"));
        const double alpha = t.number("alpha");
        if (!(alpha >= 0 && alpha < 1)) fail(t.child("alpha"), "must lie in [0, 1)");
        const json& m0 = t.at("M0");
        out["two_stage"] = {{"alpha", alpha}, {"M0", m0.is_array() ? matrix_json(matrix(m0, t.child("M0"))) : m0}};
        t.finish();
    } else {
        out["two_stage"] = nullptr;
    }
    const bool needs_q = name.rfind("PQ", 0) == 0;
    if (needs_q && !out.contains("Q")) fail(r.child("Q"), "PQ criterion needs a matrix Q");
    if (!needs_q && out.contains("Q")) fail(r.child("Q"), "Q is only used by the PQ criterion");
    if (name == "WA" && !out.contains("W")) fail(r.child("W"), "weighted-A criterion needs a matrix W");
    if (name != "WA" && out.contains("W")) fail(r.child("W"), "W is only used by the WA criterion");
    r.finish();
    return out;
}

} // namespace

CriterionSpec criterion_from_json(const nlohmann::json& j, int d, const std::string& path) {
    const json n = normalize_criterion(j, path);
    const std::string name = n.at("name").get<std::string>();
    CriterionSpec spec;
    if (name == "Sum") {
        std::vector<double> w;
        std::vector<CriterionSpec> specs;
        for (std::size_t i = 0; i < n.at("terms").size(); ++i) {
            const auto& t = n.at("terms")[i];
            w.push_back(t.at("weight").get<double>());
            specs.push_back(criterion_from_json(t.at("criterion"), d, path + "/terms/" + std::to_string(i) + "/criterion"));
        }
        spec = CriterionSpec::sum(std::move(w), std::move(specs));
    } else {
        spec = CriterionSpec::from_name(name);
    }
    if (n.contains("Q")) spec.q = matrix(n.at("Q"), path + "/Q");
    if (n.contains("W")) spec.w = sym_matrix(n.at("W"), d, path + "/W");
    if (!n.at("two_stage").is_null()) {
        const auto& t = n.at("two_stage");
        spec.two_stage = TwoStage{t.at("alpha").get<double>(), sym_matrix(t.at("M0"), d, path + "/two_stage/M0")};
    }
    if (d > 0) {
        try {
            spec.validate(d);
        } catch (const InvalidInput& e) {
            fail(path, e.what());
        }
    }
    return spec;
}

nlohmann::json criterion_to_json(const CriterionSpec& spec) {
    json out;
    out["name"] = spec.name();
    if (spec.family == Family::Sum) {
        out["terms"] = json::array();
        for (std::size_t i = 0; i < spec.terms.size(); ++i)
            out["terms"].push_back({{"weight", spec.term_weights[i]}, {"criterion", criterion_to_json(spec.terms[i])}});
    }
    if (spec.family == Family::PQ) out["Q"] = matrix_json(spec.q);
    if (spec.w) out["W"] = matrix_json(spec.w->mat());
    if (spec.two_stage)
        out["two_stage"] = {{"alpha", spec.two_stage->alpha}, {"M0", matrix_json(spec.two_stage->m0.mat())}};
    else
        out["two_stage"] = nullptr;
    return out;
}

ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    ObjectReader root(j, "");
    cfg.schema_version = static_cast<int>(root.integer("schema_version"));
    if (cfg.schema_version != kSchemaVersion)
        fail("/schema_version", "unsupported version " + std::to_string(cfg.schema_version) + " (expected " +
                                    std::to_string(kSchemaVersion) + ")");

    {
        ObjectReader m(root.at("model"), "/model");
        cfg.model.name = m.string("name");
        if (m.has("constants")) {
            cfg.model.constants = m.at("constants");
            if (!cfg.model.constants.is_object()) fail(m.child("constants"), "expected an object");
        }
        if (m.has("theta_bar")) cfg.model.theta_bar = number_list(m.at("theta_bar"), m.child("theta_bar"));
        if (m.has("noise_covariance")) {
            const json& nc = m.at("noise_covariance");
            if (nc.is_array()) cfg.model.noise_covariance = matrix(nc, m.child("noise_covariance"));
            else if (!(nc.is_string() && nc.get<std::string>() == "identity"))
                fail(m.child("noise_covariance"), "expected a matrix or \"identity\"");
        }
        if (m.has("jacobian")) {
            ObjectReader jr(m.at("jacobian"), m.child("jacobian"));
            cfg.model.h_rel = jr.number("h_rel", 1e-6);
            if (!(cfg.model.h_rel > 0)) fail(jr.child("h_rel"), "must be positive");
            const std::string sc = jr.string("scaling", "absolute");
            if (sc == "absolute") cfg.model.scaling = JacobianScaling::absolute;
            else if (sc == "relative") cfg.model.scaling = JacobianScaling::relative;
            else fail(jr.child("scaling"), "expected \"absolute\" or \"relative\"");
            jr.finish();
        }
        m.finish();
    }

    {
        const json& g = root.at("grid");
        if (!g.is_array() || g.empty()) fail("/grid", "expected a non-empty array of axes");
        for (std::size_t i = 0; i < g.size(); ++i) {
            const std::string p = "/grid/" + std::to_string(i);
            ObjectReader a(g[i], p);
            AxisBlock ax;
            ax.name = a.string("name", "x" + std::to_string(i + 1));
            ax.axis.min = a.number("min");
            ax.axis.max = a.number("max");
            const long count = a.integer("count");
            if (count < 1) fail(a.child("count"), "must be >= 1");
            if (count > 100000000) fail(a.child("count"), "too large");
            ax.axis.count = static_cast<int>(count);
            if (!(ax.axis.max >= ax.axis.min)) fail(a.child("max"), "must be >= min");
            if (count > 1 && ax.axis.max == ax.axis.min) fail(a.child("count"), "count > 1 needs min < max");
            if (count == 1 && ax.axis.max != ax.axis.min) fail(a.child("count"), "count = 1 needs min == max");
            a.finish();
            cfg.grid.push_back(ax);
        }
    }

    cfg.criterion_json = normalize_criterion(root.at("criterion"), "/criterion");
    (void)criterion_from_json(cfg.criterion_json, 0);

    if (root.has("algorithm")) {
        ObjectReader a(root.at("algorithm"), "/algorithm");
        auto& al = cfg.algorithm;
        al.variant = a.string("variant", al.variant);
        if (al.variant != "vertex_direction") {
            try {
                (void)variant_from_string(al.variant);
            } catch (const InvalidInput& e) {
                fail(a.child("variant"), e.what());
            }
        }
        if (a.has("X0")) {
            const json& x0 = a.at("X0");
            if (x0.is_string()) {
                const std::string s = x0.get<std::string>();
                if (s == "corners") al.x0.kind = X0Block::Kind::corners;
                else if (s == "all") al.x0.kind = X0Block::Kind::all;
                else fail(a.child("X0"), "expected \"corners\", \"all\" or a list of points");
            } else if (x0.is_array() && !x0.empty()) {
                al.x0.kind = X0Block::Kind::points;
                for (std::size_t i = 0; i < x0.size(); ++i) {
                    const std::string p = a.child("X0") + "/" + std::to_string(i);
                    auto pt = number_list(x0[i], p);
                    if (pt.size() != cfg.grid.size())
                        fail(p, "point has " + std::to_string(pt.size()) + " coordinates, grid has " +
                                    std::to_string(cfg.grid.size()));
                    al.x0.points.push_back(std::move(pt));
                }
            } else {
                fail(a.child("X0"), "expected \"corners\", \"all\" or a non-empty list of points");
            }
        }
        al.schedule.eps = a.number("eps", 1e-4);
        if (!(al.schedule.eps >= 0)) fail(a.child("eps"), "must be >= 0");
        if (a.has("delta_bar")) {
            ObjectReader d(a.at("delta_bar"), a.child("delta_bar"));
            al.schedule.bar_rule = bar_rule(d.string("rule", "zero"), d.child("rule"));
            al.schedule.bar_c = d.number("c", 0.0);
            if (!(al.schedule.bar_c >= 0)) fail(d.child("c"), "must be >= 0");
            d.finish();
        }
        if (a.has("delta_under")) {
            ObjectReader d(a.at("delta_under"), a.child("delta_under"));
            al.schedule.under_rule = under_rule(d.string("rule", "zero"), d.child("rule"));
            al.schedule.under_c = d.number("c", 0.0);
            if (!(al.schedule.under_c >= 0)) fail(d.child("c"), "must be >= 0");
            d.finish();
        }
        const long max_outer = a.integer("max_outer", 1000);
        if (max_outer < 1) fail(a.child("max_outer"), "must be >= 1");
        al.caps.max_outer = static_cast<int>(max_outer);
        if (a.has("wall_limit_seconds")) {
            al.caps.wall_limit_seconds = a.number("wall_limit_seconds");
            if (!(al.caps.wall_limit_seconds > 0)) fail(a.child("wall_limit_seconds"), "must be positive");
        }
        al.w_min = a.number("w_min", 1e-9);
        if (!(al.w_min >= 0 && al.w_min < 0.5)) fail(a.child("w_min"), "must lie in [0, 0.5)");
        al.seed = a.unsigned_integer("seed", 0);
        const std::string scan = a.string("scan_order", "index");
        if (scan == "index") al.seeded_scan = false;
        else if (scan == "seeded") al.seeded_scan = true;
        else fail(a.child("scan_order"), "expected \"index\" or \"seeded\"");
        al.literal_update = a.boolean("literal_update", false);
        const std::string vstep = a.string("vertex_step", "harmonic");
        if (vstep == "harmonic") al.vertex_step = VertexStep::harmonic;
        else if (vstep == "line_search") al.vertex_step = VertexStep::line_search;
        else fail(a.child("vertex_step"), "expected \"harmonic\" or \"line_search\"");
        if (a.has("solver")) {
            ObjectReader s(a.at("solver"), a.child("solver"));
            const long mi = s.integer("max_inner_iters", al.solver.max_inner_iters);
            if (mi < 0) fail(s.child("max_inner_iters"), "must be >= 0");
            al.solver.max_inner_iters = static_cast<int>(mi);
            const std::string rule = s.string("step_rule", "exact_line_search");
            if (rule == "exact_line_search") al.solver.step_rule = StepRule::exact_line_search;
            else if (rule == "armijo") al.solver.step_rule = StepRule::armijo;
            else fail(s.child("step_rule"), "expected \"exact_line_search\" or \"armijo\"");
            al.solver.armijo_beta = s.number("armijo_beta", al.solver.armijo_beta);
            if (!(al.solver.armijo_beta > 0 && al.solver.armijo_beta < 1)) fail(s.child("armijo_beta"), "must lie in (0, 1)");
            al.solver.armijo_sigma = s.number("armijo_sigma", al.solver.armijo_sigma);
            if (!(al.solver.armijo_sigma > 0 && al.solver.armijo_sigma < 1)) fail(s.child("armijo_sigma"), "must lie in (0, 1)");
            al.solver.away_steps = s.boolean("away_steps", true);
            al.solver.support_newton = s.boolean("support_newton", true);
            s.finish();
        }
        al.solver.w_min = al.w_min;
        a.finish();
    }

    if (root.has("rates")) {
        ObjectReader r(root.at("rates"), "/rates");
        const long samples = r.integer("samples", cfg.rates.samples);
        if (samples < 10) fail(r.child("samples"), "must be >= 10");
        cfg.rates.samples = static_cast<int>(samples);
        cfg.rates.theorem = r.string("theorem", "auto");
        if (cfg.rates.theorem != "auto" && cfg.rates.theorem != "sublinear" && cfg.rates.theorem != "linear" &&
            cfg.rates.theorem != "none")
            fail(r.child("theorem"), "expected auto, sublinear, linear or none");
        cfg.rates.tol = r.number("tol", cfg.rates.tol);
        if (!(cfg.rates.tol >= 0)) fail(r.child("tol"), "must be >= 0");
        r.finish();
    }

    if (root.has("output")) {
        ObjectReader o(root.at("output"), "/output");
        cfg.output.directory = o.string("directory", cfg.output.directory);
        cfg.output.timings = o.boolean("timings", false);
        const long threads = o.integer("threads", 1);
        if (threads < 1) fail(o.child("threads"), "must be >= 1");
        cfg.output.threads = static_cast<int>(threads);
        o.finish();
    }
    root.finish();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw InvalidInput("config " + path + ": " + e.what());
    }
    return parse_config(j);
}

nlohmann::json ExperimentConfig::effective() const {
    json m = {{"name", model.name},
              {"constants", model.constants},
              {"theta_bar", model.theta_bar ? json(*model.theta_bar) : json(nullptr)},
              {"noise_covariance", model.noise_covariance ? matrix_json(*model.noise_covariance) : json("identity")},
              {"jacobian",
               {{"h_rel", model.h_rel},
                {"scaling", model.scaling == JacobianScaling::relative ? "relative" : "absolute"}}}};
    json g = json::array();
    for (const auto& a : grid) g.push_back({{"name", a.name}, {"min", a.axis.min}, {"max", a.axis.max}, {"count", a.axis.count}});
    json x0;
    switch (algorithm.x0.kind) {
    case X0Block::Kind::corners:
        x0 = "corners";
        break;
    case X0Block::Kind::all:
        x0 = "all";
        break;
    case X0Block::Kind::points:
        x0 = algorithm.x0.points;
        break;
    }
    const auto& s = algorithm.schedule;
    json al = {{"variant", algorithm.variant},
               {"X0", x0},
               {"eps", s.eps},
               {"delta_bar", {{"rule", bar_name(s.bar_rule)}, {"c", s.bar_c}}},
               {"delta_under", {{"rule", under_name(s.under_rule)}, {"c", s.under_c}}},
               {"max_outer", algorithm.caps.max_outer},
               {"wall_limit_seconds", std::isfinite(algorithm.caps.wall_limit_seconds)
                                          ? json(algorithm.caps.wall_limit_seconds)
                                          : json(nullptr)},
               {"w_min", algorithm.w_min},
               {"seed", algorithm.seed},
               {"scan_order", algorithm.seeded_scan ? "seeded" : "index"},
               {"literal_update", algorithm.literal_update},
               {"vertex_step", algorithm.vertex_step == VertexStep::harmonic ? "harmonic" : "line_search"},
               {"solver",
                {{"max_inner_iters", algorithm.solver.max_inner_iters},
                 {"step_rule", algorithm.solver.step_rule == StepRule::armijo ? "armijo" : "exact_line_search"},
                 {"armijo_beta", algorithm.solver.armijo_beta},
                 {"armijo_sigma", algorithm.solver.armijo_sigma},
                 {"away_steps", algorithm.solver.away_steps},
                 {"support_newton", algorithm.solver.support_newton}}}};
    return {{"schema_version", schema_version},
            {"model", m},
            {"grid", g},
            {"criterion", criterion_json},
            {"algorithm", al},
            {"rates", {{"samples", rates.samples}, {"theorem", rates.theorem}, {"tol", rates.tol}}},
            {"output", {{"directory", output.directory}, {"timings", output.timings}, {"threads", output.threads}}}};
}

} // namespace oed::cli
