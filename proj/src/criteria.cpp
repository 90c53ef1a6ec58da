#include "oed/criteria.hpp"

#include "oed/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oed {

namespace {

constexpr double kNegativeTol = 1e-8;
constexpr double kRankTol = 1e-10;
constexpr double kGapTol = 1e-8;

void check_not_negative(const Spectrum& s) {
    const double lmax = s.eigenvalues.cwiseAbs().maxCoeff();
    if (s.eigenvalues(0) < -kNegativeTol * std::max(1.0, lmax)) {
        std::ostringstream os;
        os << "criterion argument is not positive semidefinite (lambda_min = " << s.eigenvalues(0)
           << ")";
        throw InvalidInput(os.str());
    }
}

bool pd(const Spectrum& s) { return s.eigenvalues(0) > default_pd_tol(s); }

SymMatrix effective(const CriterionSpec& spec, const SymMatrix& m) {
    if (!spec.two_stage) return m;
    const TwoStage& ts = *spec.two_stage;
    if (ts.m0.dim() != m.dim()) throw InvalidInput("two-stage M0 dimension mismatch");
    SymMatrix e = m * (1.0 - ts.alpha);
    e.add_scaled(ts.m0, ts.alpha);
    return e;
}

double outer_factor(const CriterionSpec& spec) {
    return spec.two_stage ? 1.0 - spec.two_stage->alpha : 1.0;
}

SymMatrix from_spectrum(const Spectrum& s, const Eigen::VectorXd& f) {
    return SymMatrix(Eigen::MatrixXd(s.eigenvectors * f.asDiagonal() * s.eigenvectors.transpose()));
}

// B = Q^T M^+ Q when ran Q lies in ran M.
std::optional<Eigen::MatrixXd> pq_inner(const Eigen::MatrixXd& q, const Spectrum& s) {
    const double lmax = s.eigenvalues.cwiseAbs().maxCoeff();
    const double cut = kRankTol * std::max(lmax, 1e-300);
    const Eigen::Index d = s.eigenvalues.size();
    Eigen::VectorXd inv(d);
    Eigen::VectorXd proj(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const bool keep = s.eigenvalues(i) > cut;
        inv(i) = keep ? 1.0 / s.eigenvalues(i) : 0.0;
        proj(i) = keep ? 1.0 : 0.0;
    }
    const Eigen::MatrixXd vtq = s.eigenvectors.transpose() * q;
    const Eigen::MatrixXd outside = (Eigen::VectorXd::Ones(d) - proj).asDiagonal() * vtq;
    if (outside.norm() > 1e-8 * std::max(1.0, q.norm())) return std::nullopt;
    Eigen::MatrixXd b = vtq.transpose() * inv.asDiagonal() * vtq;
    return Eigen::MatrixXd(0.5 * (b + b.transpose()));
}

ExtReal eval_core(const CriterionSpec& spec, const Spectrum& s) {
    switch (spec.family) {
    case Family::D:
        if (!pd(s)) return kInfinity;
        return -s.eigenvalues.array().log().sum();
    case Family::TildeP:
        if (!pd(s)) return kInfinity;
        if (spec.p == 0) return -s.eigenvalues.array().log().sum();
        return s.eigenvalues.array().pow(-spec.p).sum();
    case Family::P:
        if (!pd(s)) return kInfinity;
        return std::pow(s.eigenvalues.array().pow(-spec.p).sum(), 1.0 / spec.p);
    case Family::E:
        if (!pd(s)) return kInfinity;
        return 1.0 / s.eigenvalues(0);
    case Family::WeightedA: {
        if (!pd(s)) return kInfinity;
        const Eigen::VectorXd inv = s.eigenvalues.cwiseInverse();
        const Eigen::MatrixXd vtwv = s.eigenvectors.transpose() * spec.w->mat() * s.eigenvectors;
        return vtwv.diagonal().dot(inv);
    }
    case Family::PQ: {
        if (spec.q.rows() != s.eigenvalues.size()) throw InvalidInput("PQ: Q row count mismatch");
        const auto b = pq_inner(spec.q, s);
        if (!b) return kInfinity;
        const Spectrum sb = eig_sym(SymMatrix(*b));
        if (!(sb.eigenvalues(0) > 0)) return kInfinity;
        if (spec.p == 0) return sb.eigenvalues.array().log().sum();
        return std::pow(sb.eigenvalues.array().pow(spec.p).sum(), 1.0 / spec.p);
    }
    case Family::Sum:
        break;
    }
    throw InvalidInput("unsupported criterion family");
}

SymMatrix grad_core(const CriterionSpec& spec, const Spectrum& s, const SymMatrix& m) {
    const int d = static_cast<int>(s.eigenvalues.size());
    if (spec.family != Family::PQ && !pd(s))
        throw DomainError("gradient requested outside the criterion domain", s.eigenvalues(0));
    const Eigen::ArrayXd lam = s.eigenvalues.array();
    switch (spec.family) {
    case Family::D:
        return from_spectrum(s, -lam.inverse().matrix());
    case Family::TildeP:
        if (spec.p == 0) return from_spectrum(s, -lam.inverse().matrix());
        return from_spectrum(s, (-spec.p * lam.pow(-spec.p - 1)).matrix());
    case Family::P: {
        const double t = lam.pow(-spec.p).sum();
        const double c = std::pow(t, 1.0 / spec.p - 1.0);
        return from_spectrum(s, (-c * lam.pow(-spec.p - 1)).matrix());
    }
    case Family::WeightedA: {
        const SymMatrix inv = from_spectrum(s, lam.inverse().matrix());
        return SymMatrix(Eigen::MatrixXd(-inv.mat() * spec.w->mat() * inv.mat()));
    }
    case Family::E: {
        if (d > 1 && 1.0 - lam(0) / lam(1) < kGapTol)
            throw NonSmoothPoint("E-criterion gradient undefined: smallest eigenvalue is not simple");
        const Eigen::VectorXd v = s.eigenvectors.col(0);
        return SymMatrix::outer(v) * (-1.0 / (lam(0) * lam(0)));
    }
    case Family::PQ: {
        if (!pd(s))
            throw DomainError("PQ gradient requires a positive definite argument", s.eigenvalues(0));
        const Eigen::MatrixXd minv = from_spectrum(s, lam.inverse().matrix()).mat();
        const Eigen::MatrixXd mq = minv * spec.q;
        const Spectrum sb = eig_sym(SymMatrix(Eigen::MatrixXd(spec.q.transpose() * mq)));
        const Eigen::ArrayXd mu = sb.eigenvalues.array();
        Eigen::MatrixXd core;
        if (spec.p == 0) {
            core = from_spectrum(sb, mu.inverse().matrix()).mat();
        } else {
            const double c = std::pow(mu.pow(spec.p).sum(), 1.0 / spec.p - 1.0);
            core = c * from_spectrum(sb, mu.pow(spec.p - 1).matrix()).mat();
        }
        return SymMatrix(Eigen::MatrixXd(-mq * core * mq.transpose()));
    }
    case Family::Sum:
        break;
    }
    (void)m;
    throw InvalidInput("unsupported criterion family");
}

} // namespace

CriterionSpec CriterionSpec::d_optimal() { return CriterionSpec{}; }

CriterionSpec CriterionSpec::a_optimal() { return p_mean(1.0); }

CriterionSpec CriterionSpec::p_mean(double p) {
    CriterionSpec s;
    s.family = Family::P;
    s.p = p;
    return s;
}

CriterionSpec CriterionSpec::pq(double p, const Eigen::MatrixXd& q) {
    CriterionSpec s;
    s.family = Family::PQ;
    s.p = p;
    s.q = q;
    return s;
}

CriterionSpec CriterionSpec::weighted_a(const SymMatrix& w) {
    CriterionSpec s;
    s.family = Family::WeightedA;
    s.w = w;
    return s;
}

CriterionSpec CriterionSpec::e_optimal() {
    CriterionSpec s;
    s.family = Family::E;
    return s;
}

CriterionSpec CriterionSpec::tilde_p(double p) {
    CriterionSpec s;
    s.family = Family::TildeP;
    s.p = p;
    return s;
}

CriterionSpec CriterionSpec::sum(std::vector<double> weights, std::vector<CriterionSpec> specs) {
    if (weights.size() != specs.size() || specs.empty())
        throw InvalidInput("criterion sum needs one weight per term");
    CriterionSpec s;
    s.family = Family::Sum;
    s.term_weights = std::move(weights);
    s.terms = std::move(specs);
    return s;
}

CriterionSpec CriterionSpec::with_two_stage(double alpha, const SymMatrix& m0) const {
    CriterionSpec s = *this;
    s.two_stage = TwoStage{alpha, m0};
    return s;
}

void CriterionSpec::validate(int d) const {
    switch (family) {
    case Family::D:
    case Family::E:
        break;
    case Family::P:
        if (!(p > 0)) throw InvalidInput("P criterion requires p > 0");
        break;
    case Family::TildeP:
        if (!(p == 0 || p >= 1)) throw InvalidInput("TildeP criterion requires p = 0 or p >= 1");
        break;
    case Family::PQ: {
        if (!(p >= 0)) throw InvalidInput("PQ criterion requires p >= 0");
        if (q.rows() != d || q.cols() < 1 || q.cols() > d)
            throw InvalidInput("PQ criterion requires Q of shape d x s with 1 <= s <= d");
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(q);
        const auto sv = svd.singularValues();
        if (!(sv(sv.size() - 1) > kRankTol * sv(0)))
            throw InvalidInput("PQ criterion requires Q of full column rank");
        break;
    }
    case Family::WeightedA:
        if (!w || w->dim() != d) throw InvalidInput("weighted-A criterion requires a d x d matrix W");
        if (eig_sym(*w).eigenvalues(0) < -kNegativeTol * std::max(1.0, op_norm(*w)))
            throw InvalidInput("weighted-A criterion requires W positive semidefinite");
        break;
    case Family::Sum:
        if (terms.empty() || terms.size() != term_weights.size())
            throw InvalidInput("criterion sum needs one weight per term");
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (!(term_weights[i] >= 0)) throw InvalidInput("criterion sum weights must be >= 0");
            terms[i].validate(d);
        }
        break;
    }
    if (two_stage) {
        if (!(two_stage->alpha >= 0 && two_stage->alpha < 1))
            throw InvalidInput("two-stage alpha must lie in [0, 1)");
        if (two_stage->m0.dim() != d) throw InvalidInput("two-stage M0 dimension mismatch");
        const Spectrum s = eig_sym(two_stage->m0);
        if (s.eigenvalues(0) < -kNegativeTol * std::max(1.0, s.eigenvalues.cwiseAbs().maxCoeff()))
            throw InvalidInput("two-stage M0 must be positive semidefinite");
    }
}

namespace {

std::string fmt_p(double p) {
    std::ostringstream os;
    os.precision(17);
    os << p;
    return os.str();
}

} // namespace

std::string CriterionSpec::name() const {
    switch (family) {
    case Family::D:
        return "D";
    case Family::P:
        return p == 1.0 ? "A" : "P:" + fmt_p(p);
    case Family::PQ:
        return "PQ:" + fmt_p(p);
    case Family::WeightedA:
        return "WA";
    case Family::E:
        return "E";
    case Family::TildeP:
        return "TildeP:" + fmt_p(p);
    case Family::Sum:
        return "Sum";
    }
    return "?";
}

CriterionSpec CriterionSpec::from_name(const std::string& name) {
    const auto colon = name.find(':');
    const std::string head = name.substr(0, colon);
    double p = 0.0;
    bool has_p = colon != std::string::npos;
    if (has_p) {
        const std::string tail = name.substr(colon + 1);
        std::size_t used = 0;
        try {
            p = std::stod(tail, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != tail.size())
            throw InvalidInput("criterion name '" + name + "' has a malformed exponent");
    }
    auto no_p = [&](CriterionSpec s) {
        if (has_p) throw InvalidInput("criterion '" + head + "' takes no exponent");
        return s;
    };
    auto need_p = [&](const char* what) {
        if (!has_p) throw InvalidInput(std::string("criterion '") + what + "' needs an exponent, e.g. '" +
                                       what + ":2'");
    };
    if (head == "D") return no_p(d_optimal());
    if (head == "A") return no_p(a_optimal());
    if (head == "E") return no_p(e_optimal());
    if (head == "WA") {
        CriterionSpec s;
        s.family = Family::WeightedA;
        return no_p(s);
    }
    if (head == "P") {
        need_p("P");
        return p_mean(p);
    }
    if (head == "PQ") {
        need_p("PQ");
        CriterionSpec s;
        s.family = Family::PQ;
        s.p = p;
        return s;
    }
    if (head == "TildeP") {
        need_p("TildeP");
        return tilde_p(p);
    }
    throw InvalidInput("unknown criterion '" + name + "'");
}

bool CriterionSpec::smooth() const {
    if (family == Family::E) return false;
    if (family == Family::Sum)
        return std::all_of(terms.begin(), terms.end(), [](const CriterionSpec& t) { return t.smooth(); });
    return true;
}

ExtReal eval(const CriterionSpec& spec, const SymMatrix& m) {
    if (spec.two_stage) check_not_negative(eig_sym(m));
    const SymMatrix me = effective(spec, m);
    if (spec.family == Family::Sum) {
        if (!spec.two_stage) check_not_negative(eig_sym(me));
        ExtReal total = 0.0;
        for (std::size_t i = 0; i < spec.terms.size(); ++i) {
            const ExtReal v = eval(spec.terms[i], me);
            if (!is_finite_value(v)) return kInfinity;
            total += spec.term_weights[i] * v;
        }
        return total;
    }
    const Spectrum s = eig_sym(me);
    if (!spec.two_stage) check_not_negative(s);
    return eval_core(spec, s);
}

SymMatrix grad(const CriterionSpec& spec, const SymMatrix& m) {
    const SymMatrix me = effective(spec, m);
    const double f = outer_factor(spec);
    if (spec.family == Family::Sum) {
        SymMatrix g = SymMatrix::zero(m.dim());
        for (std::size_t i = 0; i < spec.terms.size(); ++i)
            g.add_scaled(grad(spec.terms[i], me), spec.term_weights[i]);
        return g * f;
    }
    const Spectrum s = eig_sym(me);
    if (spec.family == Family::PQ && !is_finite_value(eval_core(spec, s)))
        throw DomainError("gradient requested outside the criterion domain", s.eigenvalues(0));
    SymMatrix g = grad_core(spec, s, me);
    if (f != 1.0) g *= f;
    return g;
}

double sensitivity(const CriterionSpec& spec, const SymMatrix& m, const SymMatrix& atom) {
    return frob_inner(grad(spec, m), atom - m);
}

SensitivityField::SensitivityField(const CriterionSpec& spec, const SymMatrix& m)
    : g_(grad(spec, m)), g_dot_m_(frob_inner(g_, m)) {}

double strong_convexity_mu(int p, double c) {
    if (p < 0) throw InvalidInput("strong convexity modulus requires an integer p >= 0");
    if (!(c > 0)) throw InvalidInput("strong convexity modulus requires C > 0");
    return std::max(1, p) * (p + 1.0) / std::pow(c, p + 2.0);
}

double lower_bound_from_value(double p, double r, double opnorm, int d) {
    if (!(p >= 0)) throw InvalidInput("lower bound requires p >= 0");
    if (!std::isfinite(r)) throw InvalidInput("lower bound requires a finite R");
    if (!(opnorm > 0)) throw InvalidInput("lower bound requires a positive operator norm");
    if (p == 0) return std::exp(-r) * std::pow(opnorm, -(d - 1.0));
    if (!(r > 0)) throw InvalidInput("lower bound with p > 0 requires R > 0");
    return 1.0 / r;
}

} // namespace oed
