#include "oed/rates_diag.hpp"

#include "oed/errors.hpp"
#include "oed/weight_solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace oed {

namespace {

constexpr double kBaryTol = 1e-10;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Distance between aff(s) (or conv(s) when constrain_s) and conv(t) restricted to the
// affine parametrization by the given points; nullopt when the minimizer leaves the hulls.
std::optional<double> pair_distance(const std::vector<const Eigen::VectorXd*>& s,
                                    const std::vector<const Eigen::VectorXd*>& t, bool constrain_s) {
    const Eigen::VectorXd& s0 = *s.front();
    const Eigen::VectorXd& t0 = *t.front();
    const auto ns = static_cast<Eigen::Index>(s.size()) - 1;
    const auto nt = static_cast<Eigen::Index>(t.size()) - 1;
    const Eigen::VectorXd rhs = t0 - s0;
    if (ns + nt == 0) return rhs.norm();
    Eigen::MatrixXd a(s0.size(), ns + nt);
    for (Eigen::Index i = 0; i < ns; ++i) a.col(i) = *s[static_cast<std::size_t>(i) + 1] - s0;
    for (Eigen::Index j = 0; j < nt; ++j) a.col(ns + j) = -(*t[static_cast<std::size_t>(j) + 1] - t0);
    const Eigen::VectorXd x = a.completeOrthogonalDecomposition().solve(rhs);
    auto bary_ok = [&](Eigen::Index off, Eigen::Index n) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (x(off + i) < -kBaryTol) return false;
            sum += x(off + i);
        }
        return 1.0 - sum >= -kBaryTol;
    };
    if (!bary_ok(ns, nt)) return std::nullopt;
    if (constrain_s && !bary_ok(0, ns)) return std::nullopt;
    return (a * x - rhs).norm();
}

std::vector<const Eigen::VectorXd*> subset(std::span<const Eigen::VectorXd> pts, unsigned mask) {
    std::vector<const Eigen::VectorXd*> out;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (mask & (1u << i)) out.push_back(&pts[i]);
    return out;
}

// dist(aff(a), conv(b)).
double affine_to_polytope(std::span<const Eigen::VectorXd> a, std::span<const Eigen::VectorXd> b) {
    std::vector<const Eigen::VectorXd*> sa;
    for (const auto& p : a) sa.push_back(&p);
    double best = std::numeric_limits<double>::infinity();
    const unsigned nb = 1u << b.size();
    for (unsigned mb = 1; mb < nb; ++mb)
        if (auto d = pair_distance(sa, subset(b, mb), false)) best = std::min(best, *d);
    return best;
}

void require_small(std::span<const SymMatrix> atoms) {
    if (atoms.empty()) throw InvalidInput("pyramidal width needs at least one atom");
    if (atoms.size() > 8) throw UnsupportedSize("pyramidal width enumeration supports at most 8 atoms");
    const int d = atoms.front().dim();
    if (d * (d + 1) / 2 > 6) throw UnsupportedSize("pyramidal width enumeration supports ambient dimension <= 6");
}

} // namespace

double polytope_distance(std::span<const Eigen::VectorXd> a, std::span<const Eigen::VectorXd> b) {
    if (a.empty() || b.empty()) throw InvalidInput("polytope distance needs non-empty point sets");
    if (a.size() > 16 || b.size() > 16) throw UnsupportedSize("polytope distance supports at most 16 points");
    double best = std::numeric_limits<double>::infinity();
    const unsigned na = 1u << a.size();
    const unsigned nb = 1u << b.size();
    for (unsigned ma = 1; ma < na; ++ma) {
        const auto sa = subset(a, ma);
        for (unsigned mb = 1; mb < nb; ++mb)
            if (auto d = pair_distance(sa, subset(b, mb), true)) best = std::min(best, *d);
    }
    return best;
}

double diameter(std::span<const SymMatrix> atoms) {
    if (atoms.empty()) throw InvalidInput("diameter of an empty set");
    double best = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i)
        for (std::size_t j = i + 1; j < atoms.size(); ++j) best = std::max(best, frob_norm(atoms[i] - atoms[j]));
    return best;
}

double pwidth_bruteforce(std::span<const SymMatrix> atoms) {
    require_small(atoms);
    const double diam = diameter(atoms);
    if (!(diam > 0)) throw InvalidInput("pyramidal width of a single point is undefined");
    const double tol = 1e-9 * diam;

    std::vector<Eigen::VectorXd> pts;
    for (const auto& a : atoms) {
        Eigen::VectorXd v = svec(a);
        const bool dup = std::any_of(pts.begin(), pts.end(), [&](const Eigen::VectorXd& p) {
            return (p - v).norm() <= tol;
        });
        if (!dup) pts.push_back(std::move(v));
    }
    std::vector<Eigen::VectorXd> verts;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::vector<Eigen::VectorXd> others;
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (j != i) others.push_back(pts[j]);
        if (others.empty() || polytope_distance(std::span(&pts[i], 1), others) > tol) verts.push_back(pts[i]);
    }
    const unsigned nv = static_cast<unsigned>(verts.size());
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask + 1 < (1u << nv); ++mask) {
        std::vector<Eigen::VectorXd> f, rest;
        for (unsigned i = 0; i < nv; ++i) (mask & (1u << i) ? f : rest).push_back(verts[i]);
        if (affine_to_polytope(f, rest) <= tol) continue; // not a face
        best = std::min(best, polytope_distance(f, rest));
    }
    return best;
}

Functional as_functional(const CriterionSpec& spec) {
    return Functional{[spec](const SymMatrix& m) { return eval(spec, m); },
                      [spec](const SymMatrix& m) { return grad(spec, m); }};
}

RateReport estimate_constants(const Functional& f, std::span<const SymMatrix> atoms, int samples,
                              std::uint64_t seed) {
    if (atoms.empty()) throw InvalidInput("constant estimation needs atoms");
    if (samples < 10) throw InvalidInput("constant estimation needs at least 10 samples");
    std::mt19937_64 rng(seed);
    const std::size_t n = atoms.size();
    std::vector<std::size_t> perm(n);

    struct Sample {
        SymMatrix m;
        std::vector<std::size_t> support;
    };
    auto draw = [&]() {
        std::iota(perm.begin(), perm.end(), 0);
        const std::size_t s = 1 + static_cast<std::size_t>(rng() % n);
        for (std::size_t i = 0; i < s; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
            std::swap(perm[i], perm[j]);
        }
        std::vector<double> w(s);
        double total = 0.0;
        for (auto& x : w) {
            x = -std::log(1.0 - uniform01(rng));
            total += x;
        }
        Sample out{SymMatrix::zero(atoms.front().dim()), {}};
        for (std::size_t i = 0; i < s; ++i) {
            out.m.add_scaled(atoms[perm[i]], w[i] / total);
            out.support.push_back(perm[i]);
        }
        return out;
    };

    RateReport rep;
    rep.L_est = 0.0;
    rep.mu_est = std::numeric_limits<double>::infinity();
    rep.mu_Psi_M_est = std::numeric_limits<double>::infinity();
    rep.C_Psi_M_est = 0.0;
    rep.diam = diameter(atoms);
    int valid = 0;
    for (long attempt = 0; attempt < 50L * samples && valid < samples; ++attempt) {
        const Sample a = draw();
        const Sample b = draw();
        const ExtReal va = f.value(a.m);
        const ExtReal vb = f.value(b.m);
        if (!is_finite_value(va) || !is_finite_value(vb)) continue;
        const SymMatrix diff = b.m - a.m;
        const double nrm2 = frob_inner(diff, diff);
        if (nrm2 < 1e-24) continue;
        const SymMatrix g = f.gradient(a.m);
        const double lin = frob_inner(g, diff);
        const double ratio = 2.0 * (vb - va - lin) / nrm2;
        rep.L_est = std::max(rep.L_est, ratio);
        rep.mu_est = std::min(rep.mu_est, ratio);

        std::size_t mi = 0;
        double mv = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double p = frob_inner(g, atoms[i]);
            if (p < mv) {
                mv = p;
                mi = i;
            }
        }
        double nv = -std::numeric_limits<double>::infinity();
        for (auto i : a.support) nv = std::max(nv, frob_inner(g, atoms[i]));
        const double den = mv - nv;
        (void)mi;
        if (lin < 0 && den < 0) {
            const double alpha = lin / den;
            rep.mu_Psi_M_est = std::min(rep.mu_Psi_M_est, 2.0 / (alpha * alpha) * (vb - va - lin));
        }
        const double alpha = 1.0 - uniform01(rng); // (0, 1]
        SymMatrix mid = a.m;
        mid.add_scaled(diff, alpha);
        const ExtReal vm = f.value(mid);
        if (is_finite_value(vm))
            rep.C_Psi_M_est = std::max(rep.C_Psi_M_est, 2.0 / (alpha * alpha) * (vm - va - alpha * lin));
        ++valid;
    }
    if (valid < 10) throw EstimationError("fewer than 10 valid samples with finite criterion values");
    rep.samples_used = valid;
    if (!std::isfinite(rep.mu_Psi_M_est)) rep.mu_Psi_M_est = 0.0;
    rep.note = "constants are sample-based estimates";
    return rep;
}

RateReport estimate_constants(const CriterionSpec& spec, std::span<const SymMatrix> atoms, int samples,
                              std::uint64_t seed) {
    return estimate_constants(as_functional(spec), atoms, samples, seed);
}

std::vector<double> sublinear_bound_curve(double h1, double lipschitz, double diam, double c_bar, double c_under,
                                          int k_max) {
    std::vector<double> out;
    const double c = h1 + lipschitz * diam * diam + c_bar + c_under;
    for (int k = 2; k <= k_max; ++k) out.push_back(2.0 / (k + 2.0) * c);
    return out;
}

LinearBound linear_bound_curve(double h0, double mu_ratio, int k_max, const std::optional<PwidthInputs>& pw) {
    if (!(mu_ratio > 0)) throw InvalidInput("mu ratio must be positive");
    LinearBound lb;
    lb.r = 1.0 - std::min(0.5, mu_ratio);
    double v = h0;
    for (int k = 0; k <= k_max; ++k) {
        lb.curve.push_back(v);
        v *= lb.r;
    }
    if (pw) {
        const double q = pw->diam > 0 ? (pw->mu / pw->lipschitz) * std::pow(pw->pwidth / pw->diam, 2) : 0.0;
        lb.r_pwidth = 1.0 - std::min(0.5, q);
    }
    return lb;
}

ActiveSet active_set_quantities(const DesignSpace& space, const CriterionSpec& spec, const Design& xi) {
    const SymMatrix m = info_matrix(space, xi);
    const SymMatrix g = grad(spec, m);
    ActiveSet a;
    double mv = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < space.size(); ++i) {
        const double p = frob_inner(g, space.atom(i));
        if (p < mv) {
            mv = p;
            a.m_index = i;
        }
    }
    double nv = -std::numeric_limits<double>::infinity();
    for (const auto& e : xi.entries()) {
        const double p = frob_inner(g, space.atom(e.index));
        if (p > nv) {
            nv = p;
            a.n_index = e.index;
        }
    }
    a.g = nv - mv;
    return a;
}

std::size_t greedy_packing_estimate(std::span<const SymMatrix> matrices, double radius) {
    if (!(radius > 0)) throw InvalidInput("packing radius must be positive");
    std::vector<const SymMatrix*> kept;
    for (const auto& m : matrices) {
        const bool far = std::all_of(kept.begin(), kept.end(),
                                     [&](const SymMatrix* k) { return op_norm(m - *k) > radius; });
        if (far) kept.push_back(&m);
    }
    return kept.size();
}

ReferenceOptimum reference_optimum(const DesignSpace& space, const CriterionSpec& spec) {
    std::vector<std::size_t> all(space.size());
    std::iota(all.begin(), all.end(), 0);
    SolveSettings s;
    s.delta_bar = 1e-12;
    s.best_effort = true;
    s.max_inner_iters = 200000;
    const SolveResult r = solve_weights(space, all, spec, s);
    return ReferenceOptimum{r.value, r.certificate.gap, r.design};
}

void check_bound(RateReport& report, std::span<const int> ks, std::span<const double> h,
                 std::span<const double> bound, double tol) {
    if (ks.size() != h.size() || h.size() != bound.size()) throw InvalidInput("bound check: length mismatch");
    report.tol = tol;
    for (std::size_t i = 0; i < h.size(); ++i) {
        report.checks.push_back({ks[i], h[i], bound[i]});
        if (h[i] > bound[i] + tol) report.violations.push_back(ks[i]);
    }
}

double effective_lambda_max(const CriterionSpec& spec, std::span<const SymMatrix> atoms) {
    double top = 0.0;
    for (const auto& a : atoms) top = std::max(top, eig_sym(a).eigenvalues.maxCoeff());
    if (!spec.two_stage) return top;
    const double alpha = spec.two_stage->alpha;
    return alpha * eig_sym(spec.two_stage->m0).eigenvalues.maxCoeff() + (1.0 - alpha) * top;
}

nlohmann::json to_json(const RateReport& r) {
    auto opt = [](const std::optional<double>& v) -> nlohmann::json {
        if (v) return *v;
        return nullptr;
    };
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back({{"k", c.k}, {"actual", c.actual}, {"bound", c.bound}});
    return {{"L_est", r.L_est},
            {"mu_est", std::isfinite(r.mu_est) ? nlohmann::json(r.mu_est) : nlohmann::json(nullptr)},
            {"mu_Psi_M_est", r.mu_Psi_M_est},
            {"C_Psi_M_est", r.C_Psi_M_est},
            {"samples_used", r.samples_used},
            {"diam", r.diam},
            {"pwidth", opt(r.pwidth)},
            {"r", opt(r.r)},
            {"r_pwidth", opt(r.r_pwidth)},
            {"theorem", r.theorem},
            {"hypotheses_satisfied", r.hypotheses_satisfied},
            {"note", r.note},
            {"tol", r.tol},
            {"checks", checks},
            {"violations", r.violations}};
}

std::string bound_csv(const RateReport& r) {
    std::ostringstream os;
    os << "k,actual,bound\n";
    for (const auto& c : r.checks) os << c.k << ',' << format_double(c.actual) << ',' << format_double(c.bound) << "\n";
    return os.str();
}

} // namespace oed
