#pragma once

#include "oed/criteria.hpp"
#include "oed/design_space.hpp"
#include "oed/trace.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oed {

enum class StepRule { exact_line_search, armijo };

struct SolveSettings {
    // Target certificate gap; raised to gap_floor unless best_effort is set.
    double delta_bar = 0.0;
    int max_inner_iters = 100000;
    StepRule step_rule = StepRule::exact_line_search;
    double armijo_beta = 0.5;
    double armijo_sigma = 1e-4;
    bool away_steps = true;
    // Every tenth iteration, a Newton step on the weights of the current support.
    bool support_newton = true;
    // Weights are kept at or above this floor when a full step would leave the domain.
    double w_min = 1e-9;
    // Aim for delta_bar even below gap_floor; may end with achieved = false.
    bool best_effort = false;
};

struct Certificate {
    double gap = 0.0;    // -min over the active set of psi(M(xi), x)
    double target = 0.0; // tolerance the gap was compared against
    bool achieved = false;
};

struct SolveResult {
    Design design;
    Certificate certificate;
    ExtReal value = kInfinity;
    int iterations = 0;
    std::string stop_reason;
    // Criterion value after every inner iteration, starting with the initial design.
    std::vector<double> values;
};

// 1e-10 (1 + |value|): smallest gap the solver is asked to reach.
double gap_floor(ExtReal value);

// Tolerance actually used for a given request.
double effective_target(const SolveSettings& settings, ExtReal value);

// Certificate for xi against the candidates in active, computed from scratch.
Certificate certify(const DesignSpace& space, std::span<const std::size_t> active, const CriterionSpec& spec,
                    const Design& xi, double target);

// Minimizes the criterion over designs supported in active (Frank-Wolfe with away steps).
SolveResult solve_weights(const DesignSpace& space, std::span<const std::size_t> active,
                          const CriterionSpec& spec, const SolveSettings& settings,
                          const std::optional<Design>& init = std::nullopt);

enum class VertexStep {
    harmonic,    // alpha_k = 1 / (k + 2)
    line_search, // exact line search on [0, 1], harmonic step when it stalls
};

struct VertexDirectionResult {
    Design design;
    RunTrace trace;
};

// Classic vertex-direction method over the whole space:
// xi^{k+1} = (1 - alpha_k) xi^k + alpha_k delta_{x^k} with x^k the worst violator.
VertexDirectionResult vertex_direction(const DesignSpace& space, const CriterionSpec& spec, double eps,
                                       int max_iters, const Design& init,
                                       VertexStep step = VertexStep::harmonic);

} // namespace oed
