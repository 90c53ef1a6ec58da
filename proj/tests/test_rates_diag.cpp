#include "oed/errors.hpp"
#include "oed/rates_diag.hpp"
#include "oed/weight_solver.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numeric>

using namespace oed;

namespace {

SymMatrix scalar(double v) { return SymMatrix(Eigen::MatrixXd::Constant(1, 1, v)); }

SymMatrix diag2(double a, double b) { return SymMatrix::diagonal(Eigen::Vector2d(a, b)); }

} // namespace

TEST_SUITE("rates_diag") {

TEST_CASE("diameter") {
    const std::vector<SymMatrix> a{SymMatrix::zero(2), SymMatrix::identity(2)};
    CHECK(diameter(a) == doctest::Approx(std::sqrt(2.0)));
    CHECK(diameter(std::vector<SymMatrix>{SymMatrix::identity(3)}) == 0.0);
    CHECK_THROWS_AS(diameter(std::vector<SymMatrix>{}), InvalidInput);
    oracle::Rng rng(40);
    std::vector<SymMatrix> r;
    for (int i = 0; i < 5; ++i) r.emplace_back(oracle::random_symmetric(3, rng));
    double mx = 0;
    for (const auto& x : r)
        for (const auto& y : r) mx = std::max(mx, (x.mat() - y.mat()).norm());
    CHECK(diameter(r) == doctest::Approx(mx));
}

TEST_CASE("polytope distance") {
    const std::vector<Eigen::VectorXd> seg{Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 0)};
    const std::vector<Eigen::VectorXd> pt{Eigen::Vector2d(1, 3)};
    CHECK(polytope_distance(seg, pt) == doctest::Approx(3.0));
    const std::vector<Eigen::VectorXd> pt2{Eigen::Vector2d(-3, 4)};
    CHECK(polytope_distance(seg, pt2) == doctest::Approx(5.0));
    const std::vector<Eigen::VectorXd> cross{Eigen::Vector2d(1, -1), Eigen::Vector2d(1, 1)};
    CHECK(polytope_distance(seg, cross) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("pyramidal width examples") {
    CHECK(pwidth_bruteforce(std::vector<SymMatrix>{scalar(0), scalar(1)}) == doctest::Approx(1.0));
    CHECK(pwidth_bruteforce(std::vector<SymMatrix>{scalar(0), scalar(0.5), scalar(1)}) == doctest::Approx(1.0));
    for (double s : {1.0, 2.5}) {
        const std::vector<SymMatrix> tri{diag2(0, 0), diag2(s, 0), diag2(s / 2, s * std::sqrt(3.0) / 2)};
        CHECK(pwidth_bruteforce(tri) == doctest::Approx(s * std::sqrt(3.0) / 2).epsilon(1e-7));
    }
    // Unit square: the width is attained between opposite edges.
    const std::vector<SymMatrix> sq{diag2(0, 0), diag2(1, 0), diag2(0, 1), diag2(1, 1)};
    CHECK(pwidth_bruteforce(sq) <= 1.0 + 1e-9);
    CHECK(pwidth_bruteforce(sq) > 0);
    std::vector<SymMatrix> many;
    for (int i = 0; i < 9; ++i) many.push_back(scalar(i));
    CHECK_THROWS_AS(pwidth_bruteforce(many), UnsupportedSize);
    const std::vector<SymMatrix> big{SymMatrix::zero(4), SymMatrix::identity(4)};
    CHECK_THROWS_AS(pwidth_bruteforce(big), UnsupportedSize);
    CHECK_THROWS_AS(pwidth_bruteforce(std::vector<SymMatrix>{scalar(1), scalar(1)}), InvalidInput);
}

TEST_CASE("constants of a quadratic functional") {
    const Functional q{[](const SymMatrix& m) { return 0.5 * frob_inner(m, m); }, [](const SymMatrix& m) { return m; }};
    oracle::Rng rng(41);
    std::vector<SymMatrix> atoms;
    for (int i = 0; i < 6; ++i) atoms.emplace_back(oracle::random_symmetric(2, rng));
    const RateReport r = estimate_constants(q, atoms, 200, 1);
    CHECK(r.L_est == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.mu_est == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.samples_used == 200);
    CHECK_THROWS_AS(estimate_constants(q, atoms, 5, 1), InvalidInput);
}

TEST_CASE("sampling never contradicts the strong convexity modulus") {
    oracle::Rng rng(42);
    for (double c : {1.0, 2.0}) {
        std::vector<SymMatrix> atoms;
        for (int i = 0; i < 5; ++i) atoms.emplace_back(oracle::random_pd(2, rng, 0.1 * c, c));
        const RateReport r = estimate_constants(CriterionSpec::tilde_p(1.0), atoms, 300, 7);
        CHECK(r.mu_est >= strong_convexity_mu(1, c) - 1e-9);
        CHECK(r.mu_Psi_M_est <= r.C_Psi_M_est);
        CHECK(r.L_est >= r.mu_est);
    }
}

TEST_CASE("D curvature grows near singularity") {
    oracle::Rng rng(43);
    std::vector<SymMatrix> atoms, shrunk;
    for (int i = 0; i < 5; ++i) atoms.emplace_back(oracle::random_pd(2, rng));
    for (const auto& a : atoms) shrunk.push_back(a * 0.1);
    const RateReport big = estimate_constants(CriterionSpec::d_optimal(), atoms, 100, 3);
    const RateReport small = estimate_constants(CriterionSpec::d_optimal(), shrunk, 100, 3);
    CHECK(small.L_est > big.L_est);
    CHECK(small.L_est == doctest::Approx(100 * big.L_est).epsilon(1e-6));
}

TEST_CASE("infeasible samples raise an estimation error") {
    const std::vector<SymMatrix> rank1{SymMatrix::outer(Eigen::Vector2d(1, 0)), SymMatrix::outer(Eigen::Vector2d(2, 0))};
    CHECK_THROWS_AS(estimate_constants(CriterionSpec::d_optimal(), rank1, 20, 1), EstimationError);
}

TEST_CASE("bound curves") {
    const auto s = sublinear_bound_curve(1.0, 0.0, 0.0, 0.0, 0.0, 10);
    CHECK(s.size() == 9);
    CHECK(s[0] == doctest::Approx(0.5));
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] < s[i - 1]);
    CHECK(sublinear_bound_curve(0.0, 1.0, 1.0, 0.0, 0.0, 8).back() == doctest::Approx(0.2));

    CHECK(linear_bound_curve(1.0, 0.8, 3).r == doctest::Approx(0.5));
    CHECK(linear_bound_curve(1.0, 0.1, 3).r == doctest::Approx(0.9));
    const auto lb = linear_bound_curve(1.0, 0.5, 10);
    CHECK(lb.curve.size() == 11);
    CHECK(lb.curve[10] == doctest::Approx(std::pow(2.0, -10)));
    CHECK_THROWS_AS(linear_bound_curve(1.0, 0.0, 3), InvalidInput);
    const auto pw = linear_bound_curve(1.0, 0.3, 3, PwidthInputs{1.0, 2.0, 0.5, 1.0});
    REQUIRE(pw.r_pwidth.has_value());
    CHECK(*pw.r_pwidth == doctest::Approx(1.0 - 0.125));
    CHECK(*pw.r_pwidth >= pw.r);
}

TEST_CASE("active-set quantities") {
    const auto space = oracle::space_from_atoms(oracle::simplex_atoms(3));
    const Design opt = Design::uniform(std::vector<std::size_t>{0, 1, 2});
    CHECK(std::abs(active_set_quantities(space, CriterionSpec::d_optimal(), opt).g) < 1e-9);

    oracle::Rng rng(44);
    const auto tiny = oracle::random_space(2, 4, rng);
    std::vector<std::size_t> all(tiny.size());
    std::iota(all.begin(), all.end(), 0);
    const double ref = reference_optimum(tiny, CriterionSpec::d_optimal()).value;
    for (int t = 0; t < 20; ++t) {
        std::vector<Design::Entry> e;
        for (std::size_t i = 0; i < tiny.size(); ++i) e.push_back({i, oracle::uniform(rng, 0.05, 1)});
        const Design xi(e);
        const double h = eval(CriterionSpec::d_optimal(), info_matrix(tiny, xi)) - ref;
        CHECK(active_set_quantities(tiny, CriterionSpec::d_optimal(), xi).g >= h - 1e-9);
    }
    const Design single = Design::point_mass(2);
    const auto two_stage = CriterionSpec::d_optimal().with_two_stage(0.5, SymMatrix::identity(2));
    CHECK(active_set_quantities(tiny, two_stage, single).n_index == 2);
}

TEST_CASE("greedy packing") {
    const std::vector<SymMatrix> a{SymMatrix::zero(2), SymMatrix::identity(2)};
    CHECK(greedy_packing_estimate(a, 0.5) == 2);
    CHECK(greedy_packing_estimate(a, 5.0) == 1);
    CHECK_THROWS_AS(greedy_packing_estimate(a, 0.0), InvalidInput);
    oracle::Rng rng(45);
    std::vector<SymMatrix> r;
    for (int i = 0; i < 30; ++i) r.emplace_back(oracle::random_symmetric(2, rng));
    std::size_t prev = r.size() + 1;
    for (double rad : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0}) {
        const std::size_t n = greedy_packing_estimate(r, rad);
        CHECK(n <= prev);
        prev = n;
    }
}

TEST_CASE("bound checks record violations") {
    RateReport rep;
    const std::vector<int> ks{2, 3, 4};
    const std::vector<double> h{0.1, 0.3, 0.05};
    const std::vector<double> b{0.2, 0.2, 0.05};
    check_bound(rep, ks, h, b, 1e-8);
    CHECK(rep.violations == std::vector<int>{3});
    CHECK(rep.checks.size() == 3);
    CHECK(bound_csv(rep).rfind("k,actual,bound\n", 0) == 0);
    CHECK(to_json(rep).contains("violations"));
    CHECK_THROWS_AS(check_bound(rep, ks, h, std::vector<double>{1.0}, 0.0), InvalidInput);
}

TEST_CASE("effective lambda max") {
    const std::vector<SymMatrix> a{diag2(3, 1), diag2(1, 2)};
    CHECK(effective_lambda_max(CriterionSpec::d_optimal(), a) == doctest::Approx(3.0));
    const auto ts = CriterionSpec::d_optimal().with_two_stage(0.5, SymMatrix::identity(2));
    CHECK(effective_lambda_max(ts, a) == doctest::Approx(2.0));
}

}
