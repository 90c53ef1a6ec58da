#pragma once

#include "oed/criteria.hpp"
#include "oed/design_space.hpp"
#include "oed/trace.hpp"
#include "oed/weight_solver.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oed {

enum class Variant { no_exchange_strict, no_exchange_relaxed, exchange_strict, exchange_relaxed };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
bool is_strict(Variant v);
bool is_exchange(Variant v);

// Subproblem tolerances delta_bar_k (weight solve) and delta_under_k (violator search).
struct ToleranceSchedule {
    enum class BarRule { zero, constant, quadratic_decay };    // c / (k+1)^2 for quadratic_decay
    enum class UnderRule { zero, constant, harmonic_decay };   // c / (k+2) for harmonic_decay

    double eps = 0.0;
    BarRule bar_rule = BarRule::zero;
    double bar_c = 0.0;
    UnderRule under_rule = UnderRule::zero;
    double under_c = 0.0;

    double delta_bar(int k) const;
    double delta_under(int k) const;
    double sup_delta_bar() const;
    double sup_delta_under() const;
    double limsup_delta_bar() const;
    double limsup_delta_under() const;
    // eps > limsup delta_bar + limsup delta_under.
    bool termination_guaranteed() const;
    bool delta_bar_summable() const;
    void validate() const;
};

struct RunCaps {
    int max_outer = 1000;
    double wall_limit_seconds = std::numeric_limits<double>::infinity();
};

struct RunOptions {
    // delta_bar is replaced by the schedule in every iteration.
    SolveSettings solver;
    // Exchange-relaxed variant: use X^k plus the violator instead of supp plus the violator.
    bool literal_update = false;
    // Relaxed variants scan candidates in this order; empty means index order.
    std::vector<std::size_t> scan_order;
    // Keep xi^k of every iteration in the result.
    bool keep_iterates = false;
};

struct Violator {
    std::size_t index = 0;
    double psi = 0.0;
};

// Exact minimizer of psi over the whole space; ties go to the smallest index.
// delta_under is accepted for interface symmetry; enumeration is exact.
Violator worst_violator(const DesignSpace& space, const CriterionSpec& spec, const SymMatrix& m,
                        double delta_under = 0.0);

// First index in scan order with psi < -eps, or none after a full scan.
std::optional<std::size_t> any_violator(const DesignSpace& space, const CriterionSpec& spec, const SymMatrix& m,
                                        double eps, std::span<const std::size_t> scan_order = {});

// Deterministic permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

struct RunResult {
    Design design;
    RunTrace trace;
    std::vector<Design> iterates;
    // Certificate of the final subproblem solve.
    Certificate last_certificate;
};

RunResult run(const DesignSpace& space, const CriterionSpec& spec, Variant variant, std::span<const std::size_t> x0,
              const ToleranceSchedule& schedule, const RunCaps& caps = {}, const RunOptions& options = {});

// Smallest k >= 2 with 2/(k+2) (h + 2C') <= eps - delta_under_sup, C' = L diam^2/2 + (c_bar + c_under)/2.
int iteration_bound_sublinear(double psi1_minus_lb, double lipschitz, double diam, double c_bar, double c_under,
                              double eps, double delta_under_sup);

// Smallest k >= 0 with r^k h0 <= eps.
int iteration_bound_linear(double h0, double r, double eps);

} // namespace oed
