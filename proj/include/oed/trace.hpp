#pragma once

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace oed {

enum class RunStatus { running, terminated_eps_optimal, iteration_cap, infeasible };

std::string to_string(RunStatus s);
RunStatus run_status_from_string(const std::string& s);

struct IterationRecord {
    int k = 0;
    double psi = 0.0;             // criterion value at xi^k
    double gap = 0.0;             // certificate gap of the subproblem solve
    long violator = -1;           // index of x^k, -1 when none was selected
    double violator_psi = 0.0;    // psi(M(xi^k), x^k); meaningful when violator >= 0
    std::size_t n_active = 0;     // |X^k|
    std::size_t n_support = 0;    // |supp xi^k|
    double delta_bar = 0.0;
    double delta_under = 0.0;
    double wall_seconds = 0.0;    // cumulative since the run started
};

class RunTrace {
public:
    std::string algorithm;
    std::string criterion;
    double eps = 0.0;
    std::vector<IterationRecord> records;
    // Full-space min of psi at the final design.
    std::optional<double> final_min_sensitivity;

    RunStatus status() const noexcept { return status_; }
    // Throws if the status was already set.
    void set_status(RunStatus s);
    void add(const IterationRecord& r);

private:
    RunStatus status_ = RunStatus::running;
};

// One row per iteration. Columns:
// k,psi,gap,violator,violator_psi,n_active,n_support,delta_bar,delta_under[,wall_seconds]
std::string to_csv(const RunTrace& trace, bool include_timings = false);
RunTrace trace_from_csv(const std::string& text);

nlohmann::json to_json(const RunTrace& trace, bool include_timings = false);

// Shortest round-trip decimal representation; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double v);

} // namespace oed
