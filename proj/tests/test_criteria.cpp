#include "oed/criteria.hpp"
#include "oed/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace oed;

namespace {

SymMatrix diag(std::initializer_list<double> v) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) d(i++) = x;
    return SymMatrix::diagonal(d);
}

// One instance of every differentiable family in dimension d.
std::vector<CriterionSpec> smooth_families(int d, oracle::Rng& rng) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(d, 2);
    q(0, 0) = 1.0;
    q(1, 1) = 1.0;
    q(d - 1, 0) = 0.5;
    const SymMatrix w(oracle::random_psd(d, d, rng));
    const SymMatrix m0(oracle::random_pd(d, rng));
    return {CriterionSpec::d_optimal(),
            CriterionSpec::a_optimal(),
            CriterionSpec::p_mean(2.0),
            CriterionSpec::p_mean(0.5),
            CriterionSpec::pq(0.0, q),
            CriterionSpec::pq(1.0, q),
            CriterionSpec::pq(2.0, q),
            CriterionSpec::weighted_a(w),
            CriterionSpec::tilde_p(0.0),
            CriterionSpec::tilde_p(1.0),
            CriterionSpec::tilde_p(2.0),
            CriterionSpec::tilde_p(1.5),
            CriterionSpec::d_optimal().with_two_stage(0.3, m0),
            CriterionSpec::tilde_p(2.0).with_two_stage(0.1, SymMatrix::identity(d)),
            CriterionSpec::sum({0.5, 2.0}, {CriterionSpec::d_optimal(), CriterionSpec::a_optimal()})};
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(1e-300, b.norm());
}

} // namespace

TEST_SUITE("criteria") {

TEST_CASE("eval examples") {
    CHECK(eval(CriterionSpec::d_optimal(), SymMatrix::identity(2)) == doctest::Approx(0.0));
    CHECK(eval(CriterionSpec::a_optimal(), diag({0.5, 0.5})) == doctest::Approx(4.0));
    CHECK(eval(CriterionSpec::d_optimal(), diag({1, 0})) == kInfinity);
    CHECK(eval(CriterionSpec::a_optimal(), diag({1, 0})) == kInfinity);
    CHECK(eval(CriterionSpec::e_optimal(), diag({0.25, 2})) == doctest::Approx(4.0));
    CHECK(eval(CriterionSpec::e_optimal(), diag({0, 2})) == kInfinity);
    CHECK(eval(CriterionSpec::tilde_p(2.0), diag({1, 2})) == doctest::Approx(1.25));
    CHECK(eval(CriterionSpec::p_mean(2.0), diag({1, 2})) == doctest::Approx(std::sqrt(1.25)));
    CHECK(eval(CriterionSpec::weighted_a(diag({1, 0})), diag({0.5, 0.5})) == doctest::Approx(2.0));
    CHECK(eval(CriterionSpec::weighted_a(diag({1, 0})), diag({1, 0})) == kInfinity);
    // Two-stage with a positive definite M0 is finite at singular M.
    const auto ts = CriterionSpec::d_optimal().with_two_stage(0.5, SymMatrix::identity(2));
    CHECK(eval(ts, diag({1, 0})) == doctest::Approx(-std::log(1.0 * 0.5)));
}

TEST_CASE("extended reals") {
    CHECK(kInfinity > 1e300);
    CHECK_FALSE(is_finite_value(kInfinity));
    CHECK(is_finite_value(-5.0));
    CHECK(kInfinity + 1.0 == kInfinity);
}

TEST_CASE("negative input is invalid, boundary is infinite") {
    CHECK_THROWS_AS(eval(CriterionSpec::d_optimal(), diag({-1, 1})), InvalidInput);
    CHECK(eval(CriterionSpec::d_optimal(), diag({-1e-14, 1})) == kInfinity);
}

TEST_CASE("PQ criterion") {
    Eigen::MatrixXd q(2, 1);
    q << 1, 0;
    // Range condition holds for diag(2, 0): value log det(Q^T M^+ Q) = log(1/2).
    CHECK(eval(CriterionSpec::pq(0.0, q), diag({2, 0})) == doctest::Approx(std::log(0.5)));
    CHECK(eval(CriterionSpec::pq(1.0, q), diag({2, 0})) == doctest::Approx(0.5));
    CHECK(eval(CriterionSpec::pq(0.0, q), diag({0, 2})) == kInfinity);
    // Q = I reduces PQ(p) to P(p) and PQ(0) to -D.
    oracle::Rng rng(21);
    const SymMatrix m(oracle::random_pd(3, rng));
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
    CHECK(eval(CriterionSpec::pq(2.0, id), m) == doctest::Approx(eval(CriterionSpec::p_mean(2.0), m)));
    CHECK(eval(CriterionSpec::pq(0.0, id), m) == doctest::Approx(eval(CriterionSpec::d_optimal(), m)));
}

TEST_CASE("D and A against independent formulas") {
    oracle::Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        const Eigen::MatrixXd m = oracle::random_pd(4, rng);
        CHECK(eval(CriterionSpec::d_optimal(), SymMatrix(m)) == doctest::Approx(oracle::neg_log_det(m)).epsilon(1e-12));
        CHECK(eval(CriterionSpec::a_optimal(), SymMatrix(m)) == doctest::Approx(oracle::trace_inverse(m)).epsilon(1e-12));
    }
}

TEST_CASE("gradient examples") {
    CHECK((grad(CriterionSpec::d_optimal(), SymMatrix::identity(3)).mat() + Eigen::MatrixXd::Identity(3, 3)).norm() <
          1e-14);
    const SymMatrix g = grad(CriterionSpec::tilde_p(1.0), diag({1, 2}));
    CHECK(g(0, 0) == doctest::Approx(-1.0));
    CHECK(g(1, 1) == doctest::Approx(-0.25));
    CHECK_THROWS_AS(grad(CriterionSpec::d_optimal(), diag({1, 0})), DomainError);
    CHECK_THROWS_AS(grad(CriterionSpec::e_optimal(), SymMatrix::identity(2)), NonSmoothPoint);
    const SymMatrix ge = grad(CriterionSpec::e_optimal(), diag({0.5, 2}));
    CHECK(ge(0, 0) == doctest::Approx(-4.0));
}

TEST_CASE("gradients match central finite differences") {
    oracle::Rng rng(2024);
    for (int d : {2, 3}) {
        const auto specs = smooth_families(d, rng);
        for (const auto& spec : specs) {
            CAPTURE(spec.name());
            for (int t = 0; t < 100; ++t) {
                const Eigen::MatrixXd m = oracle::random_pd(d, rng, 0.5, 2.0);
                const double h = 1e-5 * (1.0 + m.norm());
                auto f = [&](const Eigen::MatrixXd& x) { return eval(spec, SymMatrix(x)); };
                const Eigen::MatrixXd fd = oracle::fd_gradient(f, m, h);
                CHECK(rel_err(grad(spec, SymMatrix(m)).mat(), fd) <= 1e-6);
            }
        }
    }
}

TEST_CASE("E gradient where the smallest eigenvalue is simple") {
    oracle::Rng rng(4);
    const CriterionSpec e = CriterionSpec::e_optimal();
    for (int t = 0; t < 30; ++t) {
        const Eigen::MatrixXd q = oracle::random_orthogonal(3, rng);
        const Eigen::Vector3d lam(0.5, 1.5, 2.5);
        const Eigen::MatrixXd m = q * lam.asDiagonal() * q.transpose();
        auto f = [&](const Eigen::MatrixXd& x) { return eval(e, SymMatrix(x)); };
        CHECK(rel_err(grad(e, SymMatrix(m)).mat(), oracle::fd_gradient(f, m, 1e-6)) <= 1e-6);
    }
}

TEST_CASE("sensitivity examples") {
    const auto d = CriterionSpec::d_optimal();
    CHECK(sensitivity(d, SymMatrix::identity(2), SymMatrix::identity(2)) == doctest::Approx(0.0));
    CHECK(sensitivity(d, SymMatrix::identity(2), SymMatrix::identity(2) * 2.0) == doctest::Approx(-2.0));
    for (int dim : {2, 3, 5}) {
        const SymMatrix m = SymMatrix::identity(dim) * (1.0 / dim);
        for (const auto& a : oracle::simplex_atoms(dim)) CHECK(std::abs(sensitivity(d, m, a)) < 1e-12);
    }
    // D without two-stage: psi = d - tr(M^{-1} a).
    oracle::Rng rng(8);
    for (int t = 0; t < 20; ++t) {
        const Eigen::MatrixXd m = oracle::random_pd(3, rng);
        const Eigen::MatrixXd a = oracle::random_psd(3, 1, rng);
        CHECK(sensitivity(d, SymMatrix(m), SymMatrix(a)) == doctest::Approx(3.0 - (m.inverse() * a).trace()));
    }
    const SensitivityField field(d, SymMatrix::identity(2));
    CHECK(field.at(SymMatrix::identity(2) * 2.0) == doctest::Approx(-2.0));
}

TEST_CASE("two-stage sensitivity closed form") {
    oracle::Rng rng(10);
    const double alpha = 0.3;
    const Eigen::MatrixXd m0 = oracle::random_pd(3, rng);
    const auto spec = CriterionSpec::d_optimal().with_two_stage(alpha, SymMatrix(m0));
    for (int t = 0; t < 20; ++t) {
        const Eigen::MatrixXd m = oracle::random_pd(3, rng);
        const Eigen::MatrixXd a = oracle::random_psd(3, 1, rng);
        const Eigen::MatrixXd ma = alpha * m0 + (1 - alpha) * m;
        const double expect = (1 - alpha) * (ma.inverse() * (m - a)).trace();
        CHECK(sensitivity(spec, SymMatrix(m), SymMatrix(a)) == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("strong convexity constant") {
    CHECK(strong_convexity_mu(0, 1.0) == doctest::Approx(1.0));
    CHECK(strong_convexity_mu(1, 1.0) == doctest::Approx(2.0));
    CHECK(strong_convexity_mu(2, 2.0) == doctest::Approx(0.375));
    CHECK_THROWS_AS(strong_convexity_mu(-1, 1.0), InvalidInput);
}

TEST_CASE("lower bound from value") {
    CHECK(lower_bound_from_value(1.0, 4.0, 1.0, 2) == doctest::Approx(0.25));
    CHECK(lower_bound_from_value(0.0, 0.0, 1.0, 2) == doctest::Approx(1.0));
    CHECK(lower_bound_from_value(0.0, 1.0, 2.0, 3) == doctest::Approx(std::exp(-1.0) / 4.0));
    CHECK_THROWS_AS(lower_bound_from_value(1.0, 0.0, 1.0, 2), InvalidInput);
    CHECK_THROWS_AS(lower_bound_from_value(1.0, -1.0, 1.0, 2), InvalidInput);
    // The bound holds: Psi_p(M) <= R implies lambda_min(M) >= bound.
    oracle::Rng rng(12);
    for (int t = 0; t < 50; ++t) {
        const SymMatrix m(oracle::random_pd(3, rng, 0.05, 4.0));
        const double lmin = eig_sym(m).eigenvalues(0);
        const double r0 = eval(CriterionSpec::d_optimal(), m);
        CHECK(lmin >= lower_bound_from_value(0.0, r0, op_norm(m), 3) * (1 - 1e-12));
        const double r1 = eval(CriterionSpec::p_mean(2.0), m);
        CHECK(lmin >= lower_bound_from_value(2.0, r1, op_norm(m), 3) * (1 - 1e-12));
    }
}

TEST_CASE("convexity and antitonicity") {
    oracle::Rng rng(31);
    const auto specs = smooth_families(3, rng);
    for (const auto& spec : specs) {
        CAPTURE(spec.name());
        for (int t = 0; t < 40; ++t) {
            const SymMatrix m(oracle::random_pd(3, rng)), n(oracle::random_pd(3, rng));
            for (double a : {0.25, 0.5, 0.75}) {
                const double lhs = eval(spec, m * a + n * (1 - a));
                CHECK(lhs <= a * eval(spec, m) + (1 - a) * eval(spec, n) + 1e-9);
            }
            const SymMatrix bigger = m + SymMatrix(oracle::random_psd(3, 2, rng));
            CHECK(eval(spec, bigger) <= eval(spec, m) + 1e-9);
        }
    }
}

TEST_CASE("strict mid-point convexity for P and TildeP") {
    oracle::Rng rng(32);
    for (const auto& spec : {CriterionSpec::p_mean(1.0), CriterionSpec::p_mean(2.0), CriterionSpec::tilde_p(1.0),
                             CriterionSpec::tilde_p(2.0), CriterionSpec::d_optimal()}) {
        for (int t = 0; t < 40; ++t) {
            const SymMatrix m(oracle::random_pd(3, rng)), n(oracle::random_pd(3, rng));
            if (frob_norm(m - n) < 1e-3) continue;
            const double mid = eval(spec, (m + n) * 0.5);
            CHECK(mid < 0.5 * (eval(spec, m) + eval(spec, n)));
        }
    }
}

TEST_CASE("strong convexity certificate holds on samples") {
    oracle::Rng rng(33);
    for (int p : {0, 1, 2}) {
        for (double c : {1.0, 2.0, 5.0}) {
            const auto spec = CriterionSpec::tilde_p(p);
            const double mu = strong_convexity_mu(p, c);
            for (int t = 0; t < 60; ++t) {
                const Eigen::MatrixXd m = oracle::random_pd(3, rng, 0.05 * c, c);
                const Eigen::MatrixXd n = oracle::random_pd(3, rng, 0.05 * c, c);
                const SymMatrix sm(m), sn(n);
                const double lhs = eval(spec, sn) - eval(spec, sm) - frob_inner(grad(spec, sm), sn - sm);
                CHECK(lhs - 0.5 * mu * std::pow(frob_norm(sn - sm), 2) >= -1e-9);
            }
        }
    }
}

TEST_CASE("scale law for D") {
    oracle::Rng rng(34);
    for (int t = 0; t < 20; ++t) {
        const SymMatrix m(oracle::random_pd(3, rng));
        const double c = oracle::uniform(rng, 0.1, 10.0);
        CHECK(eval(CriterionSpec::d_optimal(), m * c) ==
              doctest::Approx(eval(CriterionSpec::d_optimal(), m) - 3.0 * std::log(c)).epsilon(1e-12));
    }
}

TEST_CASE("names round-trip and validation") {
    for (const std::string n : {"D", "A", "E", "WA", "P:2", "PQ:0", "TildeP:1", "TildeP:2", "P:0.5"})
        CHECK(CriterionSpec::from_name(n).name() == n);
    CHECK(CriterionSpec::from_name("P:1").name() == "A");
    CHECK_THROWS_AS(CriterionSpec::from_name("Q"), InvalidInput);
    CHECK_THROWS_AS(CriterionSpec::from_name("P"), InvalidInput);
    CHECK_THROWS_AS(CriterionSpec::from_name("D:1"), InvalidInput);
    CHECK_THROWS_AS(CriterionSpec::from_name("P:x"), InvalidInput);
    CHECK_THROWS_AS(CriterionSpec::p_mean(0.0).validate(2), InvalidInput);
    CHECK_THROWS_AS(CriterionSpec::tilde_p(0.5).validate(2), InvalidInput);
    Eigen::MatrixXd q(2, 2);
    q << 1, 2, 2, 4;
    CHECK_THROWS_AS(CriterionSpec::pq(1.0, q).validate(2), InvalidInput);
    CHECK_THROWS_AS(CriterionSpec::weighted_a(diag({1, -1})).validate(2), InvalidInput);
    CHECK_THROWS_AS(CriterionSpec::d_optimal().with_two_stage(1.0, SymMatrix::identity(2)).validate(2), InvalidInput);
    CHECK_THROWS_AS(CriterionSpec::d_optimal().with_two_stage(0.5, diag({1, -1})).validate(2), InvalidInput);
    CHECK_NOTHROW(CriterionSpec::d_optimal().with_two_stage(0.5, diag({1, 0})).validate(2));
    CHECK(CriterionSpec::d_optimal().smooth());
    CHECK_FALSE(CriterionSpec::e_optimal().smooth());
}

}
