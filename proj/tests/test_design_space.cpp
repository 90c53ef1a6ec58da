#include "oed/design_space.hpp"
#include "oed/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace oed;

namespace {

DesignSpace scalar_space(std::initializer_list<double> vals) {
    std::vector<SymMatrix> atoms;
    for (double v : vals) atoms.push_back(SymMatrix(Eigen::MatrixXd::Constant(1, 1, v)));
    return oracle::space_from_atoms(atoms);
}

// Moment-matching check: same information matrix, weights on the simplex.
void check_equivalent(const DesignSpace& space, const Design& a, const Design& b) {
    CHECK(frob_norm(info_matrix(space, a) - info_matrix(space, b)) <= 1e-10 * (1 + frob_norm(info_matrix(space, a))));
    double s = 0;
    for (const auto& e : b.entries()) {
        CHECK(e.weight > 0);
        s += e.weight;
    }
    CHECK(s == doctest::Approx(1.0));
}

} // namespace

TEST_SUITE("design_space") {

TEST_CASE("information matrix examples") {
    const auto space = oracle::space_from_atoms(oracle::simplex_atoms(2));
    const SymMatrix m = info_matrix(space, Design({{0, 0.25}, {1, 0.75}}));
    CHECK(m(0, 0) == doctest::Approx(0.25));
    CHECK(m(1, 1) == doctest::Approx(0.75));
    CHECK(m(0, 1) == doctest::Approx(0.0));
    const SymMatrix p = info_matrix(space, Design::point_mass(1));
    CHECK(p(1, 1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(info_matrix(space, Design::point_mass(5)), InvalidInput);
}

TEST_CASE("information matrix is linear in the weights") {
    oracle::Rng rng(3);
    const auto space = oracle::random_space(3, 12, rng);
    for (int t = 0; t < 20; ++t) {
        std::vector<Design::Entry> e;
        Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(3, 3);
        double total = 0;
        for (std::size_t i = 0; i < space.size(); ++i) {
            const double w = oracle::uniform(rng, 0.01, 1.0);
            e.push_back({i, w});
            expect += w * space.atom(i).mat();
            total += w;
        }
        CHECK((info_matrix(space, Design(e)).mat() - expect / total).norm() < 1e-12);
    }
}

TEST_CASE("design normalization and validation") {
    const Design d({{3, 2.0}, {1, 2.0}});
    CHECK(d.size() == 2);
    CHECK(d.entries()[0].index == 1);
    CHECK(d.weight_of(3) == doctest::Approx(0.5));
    CHECK(d.weight_of(7) == 0.0);
    CHECK_THROWS_AS(Design({{0, 0.5}, {0, 0.5}}), InvalidInput);
    CHECK_THROWS_AS(Design({{0, -1.0}}), InvalidInput);
    CHECK_THROWS_AS(Design({{0, 0.0}}), InvalidInput);
    CHECK_THROWS_AS(Design().check_valid(scalar_space({1.0})), InvalidInput);
    const std::vector<std::size_t> idx{0, 2, 4, 6};
    const Design u = Design::uniform(idx);
    for (auto i : idx) CHECK(u.weight_of(i) == doctest::Approx(0.25));
}

TEST_CASE("design space validation") {
    std::vector<Eigen::VectorXd> pts{Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 0.0)};
    std::vector<SymMatrix> atoms{SymMatrix::identity(2), SymMatrix::identity(2)};
    CHECK_THROWS_AS(DesignSpace(pts, atoms), InvalidInput);
    pts[1](0) = 1.0;
    CHECK_NOTHROW(DesignSpace(pts, atoms));
    atoms[1] = SymMatrix::diagonal(Eigen::Vector2d(1.0, -1.0));
    CHECK_THROWS_AS(DesignSpace(pts, atoms), InvalidInput);
    CHECK_THROWS_AS(DesignSpace({}, {}), InvalidInput);
    const auto s = scalar_space({1.0, 2.0, 3.0});
    CHECK(s.find(Eigen::VectorXd::Constant(1, 2.0)) == std::optional<std::size_t>(2));
    CHECK_FALSE(s.find(Eigen::VectorXd::Constant(1, 2.5)).has_value());
    CHECK(s.find(Eigen::VectorXd::Constant(1, 2.05), 0.1) == std::optional<std::size_t>(2));
}

TEST_CASE("Caratheodory reduction") {
    CHECK(caratheodory_bound(1) == 2);
    CHECK(caratheodory_bound(2) == 4);
    CHECK(caratheodory_bound(3) == 7);

    const auto s1 = scalar_space({1.0, 2.0, 3.0});
    const Design u = Design::uniform(std::vector<std::size_t>{0, 1, 2});
    const Design r1 = caratheodory_reduce(s1, u);
    CHECK(r1.size() <= 2);
    CHECK(info_matrix(s1, r1)(0, 0) == doctest::Approx(2.0));

    oracle::Rng rng(5);
    for (int n : {10, 20}) {
        for (int d : {2, 3}) {
            const auto space = oracle::random_space(d, n, rng);
            std::vector<Design::Entry> e;
            for (int i = 0; i < n; ++i) e.push_back({static_cast<std::size_t>(i), oracle::uniform(rng, 0.1, 1.0)});
            const Design xi(e);
            const Design r = caratheodory_reduce(space, xi);
            CHECK(r.size() <= caratheodory_bound(d));
            check_equivalent(space, xi, r);
            // Support of the reduced design is a subset of the original support.
            for (auto i : r.support()) CHECK(xi.weight_of(i) > 0);
        }
    }
    // Already small designs are returned unchanged.
    const auto sp = oracle::random_space(2, 6, rng);
    const Design small({{0, 0.5}, {3, 0.5}});
    CHECK(caratheodory_reduce(sp, small).support() == small.support());
}

TEST_CASE("mixing") {
    const Design a = Design::point_mass(0);
    const Design b = Design::point_mass(1);
    const Design m = mix(a, b, 0.25);
    CHECK(m.weight_of(0) == doctest::Approx(0.75));
    CHECK(m.weight_of(1) == doctest::Approx(0.25));
    CHECK(mix(a, b, 0.0).support() == std::vector<std::size_t>{0});
    CHECK(mix(a, b, 1.0).support() == std::vector<std::size_t>{1});
    CHECK_THROWS_AS(mix(a, b, 1.5), InvalidInput);
    // M is affine along the mixing path.
    oracle::Rng rng(6);
    const auto space = oracle::random_space(3, 8, rng);
    const Design x({{0, 1.0}, {2, 1.0}, {5, 2.0}});
    const Design y({{1, 1.0}, {2, 3.0}});
    for (double t : {0.1, 0.5, 0.9}) {
        const SymMatrix expect = info_matrix(space, x) * (1 - t) + info_matrix(space, y) * t;
        CHECK(frob_norm(info_matrix(space, mix(x, y, t)) - expect) < 1e-12);
    }
}

TEST_CASE("pruning") {
    const Design d({{0, 0.5}, {1, 1e-12}, {2, 0.5}});
    const Design p = prune(d, 1e-9);
    CHECK(p.size() == 2);
    CHECK(p.weight_of(0) == doctest::Approx(0.5));
    CHECK(prune(d, 0.0).size() == 3);
    CHECK_THROWS_AS(prune(d, 0.6), InvalidInput);
    CHECK_THROWS_AS(prune(Design({{0, 1.0}, {1, 1.0}, {2, 1.0}}), 0.4), InvalidInput);
}

}
