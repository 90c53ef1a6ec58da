#pragma once

#include "oed/criteria.hpp"
#include "oed/design_space.hpp"
#include "oed/trace.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oed {

struct BoundCheck {
    int k = 0;
    double actual = 0.0;
    double bound = 0.0;
};

struct RateReport {
    // Sample-based constants: L_est and C_Psi_M_est never exceed the true values,
    // mu_est and mu_Psi_M_est are never below them.
    double L_est = 0.0;
    double mu_est = 0.0;
    double mu_Psi_M_est = 0.0;
    double C_Psi_M_est = 0.0;
    int samples_used = 0;
    double diam = 0.0;
    std::optional<double> pwidth;
    std::optional<double> r;
    std::optional<double> r_pwidth;
    std::string theorem; // "sublinear", "linear" or empty
    bool hypotheses_satisfied = true;
    std::string note;
    double tol = 0.0;
    std::vector<BoundCheck> checks;
    std::vector<int> violations;
};

nlohmann::json to_json(const RateReport& report);
// k,actual,bound
std::string bound_csv(const RateReport& report);

// Max pairwise Frobenius distance.
double diameter(std::span<const SymMatrix> atoms);

// Pyramidal width of conv(atoms) by enumeration of faces (at most 8 atoms, d <= 3).
double pwidth_bruteforce(std::span<const SymMatrix> atoms);

// Euclidean distance between conv(a) and conv(b).
double polytope_distance(std::span<const Eigen::VectorXd> a, std::span<const Eigen::VectorXd> b);

// A smooth functional on symmetric matrices.
struct Functional {
    std::function<ExtReal(const SymMatrix&)> value;
    std::function<SymMatrix(const SymMatrix&)> gradient;
};
Functional as_functional(const CriterionSpec& spec);

// Samples pairs of points of conv(atoms) and fills the four constants of the report.
RateReport estimate_constants(const Functional& f, std::span<const SymMatrix> atoms, int samples,
                              std::uint64_t seed);
RateReport estimate_constants(const CriterionSpec& spec, std::span<const SymMatrix> atoms, int samples,
                              std::uint64_t seed);

// (2/(k+2)) (h1 + L diam^2 + c_bar + c_under); element i is the value at k = i + 2.
std::vector<double> sublinear_bound_curve(double h1, double lipschitz, double diam, double c_bar, double c_under,
                                          int k_max);

struct LinearBound {
    double r = 1.0;
    std::vector<double> curve; // r^k h0, k = 0..k_max
    std::optional<double> r_pwidth;
};

struct PwidthInputs {
    double mu;
    double lipschitz;
    double pwidth;
    double diam;
};

// r = 1 - min{1/2, mu_ratio}; optionally the coarser r from the pyramidal width.
LinearBound linear_bound_curve(double h0, double mu_ratio, int k_max,
                               const std::optional<PwidthInputs>& pw = std::nullopt);

struct ActiveSet {
    std::size_t m_index = 0; // argmin over all atoms of <G, a>
    std::size_t n_index = 0; // argmax over the support of <G, a>
    double g = 0.0;          // <G, n - m>
};

ActiveSet active_set_quantities(const DesignSpace& space, const CriterionSpec& spec, const Design& xi);

// Size of a greedily built subset whose members are pairwise more than radius apart
// in the operator norm (a lower bound on the packing number).
std::size_t greedy_packing_estimate(std::span<const SymMatrix> matrices, double radius);

struct ReferenceOptimum {
    ExtReal value = kInfinity;
    double gap = 0.0;
    Design design;
};

// High-accuracy solve over the whole space (gap target 1e-12, best effort).
ReferenceOptimum reference_optimum(const DesignSpace& space, const CriterionSpec& spec);

// Compares h_k = psi_k - psi_ref with a bound curve; violations where actual > bound + tol.
void check_bound(RateReport& report, std::span<const int> ks, std::span<const double> h,
                 std::span<const double> bound, double tol);

// Lambda_max bound on the effective matrices of a two-stage criterion over conv(atoms).
double effective_lambda_max(const CriterionSpec& spec, std::span<const SymMatrix> atoms);

} // namespace oed
