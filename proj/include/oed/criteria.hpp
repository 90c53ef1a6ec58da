#pragma once

#include "oed/matcone.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace oed {

// Criterion values live in the extended reals: +infinity marks matrices
// outside the criterion's domain and compares above every finite value.
using ExtReal = double;
inline constexpr ExtReal kInfinity = std::numeric_limits<double>::infinity();
inline bool is_finite_value(ExtReal v) { return v < kInfinity; }

enum class Family { D, P, PQ, WeightedA, E, TildeP, Sum };

struct TwoStage {
    double alpha = 0.0;
    SymMatrix m0;
};

struct CriterionSpec {
    Family family = Family::D;
    double p = 0.0;
    Eigen::MatrixXd q;           // PQ: d x s, full column rank
    std::optional<SymMatrix> w;  // WeightedA
    std::optional<TwoStage> two_stage;
    std::vector<double> term_weights;     // Sum
    std::vector<CriterionSpec> terms;     // Sum

    static CriterionSpec d_optimal();
    static CriterionSpec a_optimal();
    static CriterionSpec p_mean(double p);
    static CriterionSpec pq(double p, const Eigen::MatrixXd& q);
    static CriterionSpec weighted_a(const SymMatrix& w);
    static CriterionSpec e_optimal();
    static CriterionSpec tilde_p(double p);
    static CriterionSpec sum(std::vector<double> weights, std::vector<CriterionSpec> specs);

    // Copy with the two-stage wrapper alpha M0 + (1 - alpha) M applied.
    CriterionSpec with_two_stage(double alpha, const SymMatrix& m0) const;

    // Throws InvalidInput when the parameters are inconsistent with dimension d.
    void validate(int d) const;

    // Short name: "D", "A", "P:p", "PQ:p", "WA", "E", "TildeP:p", "Sum".
    std::string name() const;
    // Inverse of name() for the parameter-free part; Q and W must be set afterwards.
    static CriterionSpec from_name(const std::string& name);

    // True when a gradient exists wherever the value is finite (E is excluded).
    bool smooth() const;
};

// Criterion value; +infinity outside the domain.
ExtReal eval(const CriterionSpec& spec, const SymMatrix& m);

// Gradient G with DPsi(M)E = <G, E>_F.
SymMatrix grad(const CriterionSpec& spec, const SymMatrix& m);

// psi(M, x) = <grad(M), atom - M>_F.
double sensitivity(const CriterionSpec& spec, const SymMatrix& m, const SymMatrix& atom);

// Sensitivities for many atoms at a fixed M; the gradient is computed once.
class SensitivityField {
public:
    SensitivityField(const CriterionSpec& spec, const SymMatrix& m);
    double at(const SymMatrix& atom) const { return frob_inner(g_, atom) - g_dot_m_; }
    // <G, atom> without the -<G, M> shift.
    double pairing(const SymMatrix& atom) const { return frob_inner(g_, atom); }
    const SymMatrix& gradient() const noexcept { return g_; }
    double g_dot_m() const noexcept { return g_dot_m_; }

private:
    SymMatrix g_;
    double g_dot_m_;
};

// max{1,p}(p+1)/C^{p+2}: strong convexity modulus of TildeP(p) on {0 < A <= C I}.
double strong_convexity_mu(int p, double c);

// Lower eigenvalue bound implied by Psi_p(M) <= R given the operator norm of M.
double lower_bound_from_value(double p, double r, double opnorm, int d);

} // namespace oed
