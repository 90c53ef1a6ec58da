#include "oed/trace.hpp"

#include "oed/errors.hpp"

#include <charconv>
#include <limits>
#include <cmath>
#include <sstream>

namespace oed {

std::string to_string(RunStatus s) {
    switch (s) {
    case RunStatus::running:
        return "running";
    case RunStatus::terminated_eps_optimal:
        return "terminated_eps_optimal";
    case RunStatus::iteration_cap:
        return "iteration_cap";
    case RunStatus::infeasible:
        return "infeasible";
    }
    return "?";
}

RunStatus run_status_from_string(const std::string& s) {
    for (auto st : {RunStatus::running, RunStatus::terminated_eps_optimal, RunStatus::iteration_cap,
                    RunStatus::infeasible})
        if (to_string(st) == s) return st;
    throw InvalidInput("unknown run status '" + s + "'");
}

void RunTrace::set_status(RunStatus s) {
    if (status_ != RunStatus::running) throw InvalidInput("run status already set");
    status_ = s;
}

void RunTrace::add(const IterationRecord& r) {
    if (!records.empty() && r.k <= records.back().k)
        throw InvalidInput("trace iteration numbers must increase");
    records.push_back(r);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InvalidInput("malformed number '" + s + "' in trace");
    return v;
}

constexpr const char* kHeader = "k,psi,gap,violator,violator_psi,n_active,n_support,delta_bar,delta_under";

} // namespace

std::string to_csv(const RunTrace& trace, bool include_timings) {
    std::ostringstream os;
    os << kHeader << (include_timings ? ",wall_seconds" : "") << "\n";
    for (const auto& r : trace.records) {
        os << r.k << ',' << format_double(r.psi) << ',' << format_double(r.gap) << ',' << r.violator << ','
           << (r.violator >= 0 ? format_double(r.violator_psi) : std::string()) << ',' << r.n_active << ','
           << r.n_support << ',' << format_double(r.delta_bar) << ',' << format_double(r.delta_under);
        if (include_timings) os << ',' << format_double(r.wall_seconds);
        os << "\n";
    }
    return os.str();
}

RunTrace trace_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw InvalidInput("trace is empty");
    if (line.rfind(kHeader, 0) != 0) throw InvalidInput("trace header not recognized");
    const bool timings = line.find("wall_seconds") != std::string::npos;
    RunTrace t;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        const std::size_t want = timings ? 10 : 9;
        if (f.size() != want)
            throw InvalidInput("trace line " + std::to_string(lineno) + ": expected " + std::to_string(want) +
                               " fields");
        IterationRecord r;
        try {
            r.k = std::stoi(f[0]);
            r.psi = parse_double(f[1]);
            r.gap = parse_double(f[2]);
            r.violator = std::stol(f[3]);
            r.violator_psi = r.violator >= 0 ? parse_double(f[4]) : 0.0;
            r.n_active = std::stoul(f[5]);
            r.n_support = std::stoul(f[6]);
            r.delta_bar = parse_double(f[7]);
            r.delta_under = parse_double(f[8]);
            if (timings) r.wall_seconds = parse_double(f[9]);
        } catch (const std::logic_error& e) {
            throw InvalidInput("trace line " + std::to_string(lineno) + ": " + e.what());
        }
        t.add(r);
    }
    return t;
}

nlohmann::json to_json(const RunTrace& trace, bool include_timings) {
    nlohmann::json rows = nlohmann::json::array();
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return format_double(v);
    };
    for (const auto& r : trace.records) {
        nlohmann::json j = {{"k", r.k},
                            {"psi", num(r.psi)},
                            {"gap", num(r.gap)},
                            {"violator", r.violator},
                            {"n_active", r.n_active},
                            {"n_support", r.n_support},
                            {"delta_bar", num(r.delta_bar)},
                            {"delta_under", num(r.delta_under)}};
        if (r.violator >= 0) j["violator_psi"] = num(r.violator_psi);
        if (include_timings) j["wall_seconds"] = r.wall_seconds;
        rows.push_back(j);
    }
    nlohmann::json out = {{"algorithm", trace.algorithm},
                          {"criterion", trace.criterion},
                          {"eps", trace.eps},
                          {"status", to_string(trace.status())},
                          {"iterations", rows}};
    if (trace.final_min_sensitivity) out["final_min_sensitivity"] = num(*trace.final_min_sensitivity);
    return out;
}

} // namespace oed
