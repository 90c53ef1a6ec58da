#include "oed/case_studies.hpp"
#include "oed/errors.hpp"
#include "oed/models.hpp"
#include "oed/registry.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace oed;

namespace {

// f(x, theta) = (theta_1^2, theta_1 theta_2): analytic Jacobian [[2 t1, 0], [t2, t1]].
class QuadraticModel : public Model {
public:
    int d_x() const override { return 1; }
    int d_theta() const override { return 2; }
    int d_y() const override { return 2; }
    Eigen::VectorXd predict(const Eigen::VectorXd&, const Eigen::VectorXd& t) const override {
        return Eigen::Vector2d(t(0) * t(0), t(0) * t(1));
    }
};

// Model with a deliberately wrong analytic Jacobian.
class WrongJacobian : public QuadraticModel {
public:
    bool has_analytic_jacobian() const override { return true; }
    Eigen::MatrixXd jacobian_theta(const Eigen::VectorXd&, const Eigen::VectorXd&) const override {
        return Eigen::MatrixXd::Identity(2, 2);
    }
};

// Fails for x > 0.5.
class PartialModel : public QuadraticModel {
public:
    Eigen::VectorXd predict(const Eigen::VectorXd& x, const Eigen::VectorXd& t) const override {
        if (x(0) > 0.5) throw ModelEvaluationError("out of range");
        return QuadraticModel::predict(x, t);
    }
};

OdeModel scalar_ode(double rate, double steps) {
    auto factory = [rate](const Eigen::VectorXd&, const Eigen::VectorXd&) -> OdeRhs {
        return [rate](const Eigen::VectorXd& s, Eigen::VectorXd& ds) { ds = rate * s; };
    };
    return OdeModel(1, 1, 1, factory, Eigen::VectorXd::Ones(1), [](const Eigen::VectorXd& s) { return s; },
                    [](const Eigen::VectorXd& x) { return x(0); }, steps);
}

} // namespace

TEST_SUITE("models") {

TEST_CASE("finite-difference Jacobian") {
    const QuadraticModel m;
    const Eigen::MatrixXd j = jacobian_theta_fd(m, Eigen::VectorXd::Zero(1), Eigen::Vector2d(1.0, 2.0));
    Eigen::MatrixXd expect(2, 2);
    expect << 2, 0, 2, 1;
    CHECK((j - expect).norm() < 1e-8);

    const LinearModel lin(1, 3, 2, [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd a(2, 3);
        a << 1, x(0), 2, 0, 3, x(0) * x(0);
        return a;
    });
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.5);
    const Eigen::VectorXd th = Eigen::Vector3d(0.3, -2.0, 7.0);
    CHECK((jacobian_theta_fd(lin, x, th) - lin.jacobian_theta(x, th)).norm() < 1e-8);
    CHECK_THROWS_AS(jacobian_theta_fd(lin, x, th, 0.0), InvalidInput);
}

TEST_CASE("atom examples") {
    const QuadraticModel m;
    const NoiseSpec noise = NoiseSpec::identity(2);
    const SymMatrix a = atom(m, noise, Eigen::VectorXd::Zero(1), Eigen::Vector2d(1.0, 2.0));
    // J^T J with J = [[2, 0], [2, 1]].
    CHECK(a(0, 0) == doctest::Approx(8.0));
    CHECK(a(0, 1) == doctest::Approx(2.0));
    CHECK(a(1, 1) == doctest::Approx(1.0));

    const NoiseSpec scaled(SymMatrix::identity(2) * 4.0);
    const SymMatrix b = atom(m, scaled, Eigen::VectorXd::Zero(1), Eigen::Vector2d(1.0, 2.0));
    CHECK(frob_norm(b - a * 0.25) < 1e-8);

    AtomOptions rel;
    rel.scaling = JacobianScaling::relative;
    const SymMatrix c = atom(m, noise, Eigen::VectorXd::Zero(1), Eigen::Vector2d(1.0, 2.0), rel);
    // diag(1, 2) J^T J diag(1, 2).
    CHECK(c(0, 0) == doctest::Approx(8.0));
    CHECK(c(0, 1) == doctest::Approx(4.0));
    CHECK(c(1, 1) == doctest::Approx(4.0));

    CHECK_THROWS_AS(NoiseSpec(SymMatrix::diagonal(Eigen::Vector2d(1.0, 0.0))), InvalidInput);
    CHECK_THROWS_AS(atom(m, NoiseSpec::identity(3), Eigen::VectorXd::Zero(1), Eigen::Vector2d(1.0, 2.0)),
                    InvalidInput);
}

TEST_CASE("atoms are positive semidefinite") {
    oracle::Rng rng(9);
    const LinearModel lin(2, 3, 2, [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd a(2, 3);
        a << 1, x(0), x(1), x(0) * x(1), 1, -x(1);
        return a;
    });
    const NoiseSpec noise(SymMatrix(oracle::random_pd(2, rng)));
    for (int t = 0; t < 30; ++t) {
        const Eigen::Vector2d x(oracle::uniform(rng, -2, 2), oracle::uniform(rng, -2, 2));
        const SymMatrix a = atom(lin, noise, x, Eigen::Vector3d(1, 1, 1));
        CHECK(eig_sym(a).eigenvalues(0) >= -1e-12 * (1 + op_norm(a)));
        const Eigen::MatrixXd j = lin.jacobian_theta(x, Eigen::Vector3d(1, 1, 1));
        CHECK((a.mat() - j.transpose() * noise.covariance().mat().inverse() * j).norm() < 1e-10 * (1 + op_norm(a)));
    }
}

TEST_CASE("analytic Jacobian validation") {
    const std::vector<Eigen::VectorXd> probes{Eigen::VectorXd::Zero(1)};
    CHECK_THROWS_AS(validate_analytic_jacobian(WrongJacobian(), probes, Eigen::Vector2d(1.0, 2.0)), InvalidInput);
    const LinearModel lin(1, 2, 1, [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd a(1, 2);
        a << 1, x(0);
        return a;
    });
    CHECK_NOTHROW(validate_analytic_jacobian(lin, probes, Eigen::Vector2d(1.0, 2.0)));
    CHECK_THROWS_AS(
        build_atoms(WrongJacobian(), NoiseSpec::identity(2), {Eigen::VectorXd::Zero(1)}, Eigen::Vector2d(1, 2)),
        InvalidInput);
}

TEST_CASE("Newton solver examples") {
    const ResidualFn lin = [](const Eigen::VectorXd& s) {
        Eigen::Vector2d r(2 * s(0) + s(1) - 3, s(0) - s(1));
        return Eigen::VectorXd(r);
    };
    const Eigen::VectorXd s = newton_solve(lin, Eigen::Vector2d(10.0, -5.0));
    CHECK(s(0) == doctest::Approx(1.0));
    CHECK(s(1) == doctest::Approx(1.0));

    const ResidualFn sq = [](const Eigen::VectorXd& v) { return Eigen::VectorXd::Constant(1, v(0) * v(0) - 4.0); };
    CHECK(newton_solve(sq, Eigen::VectorXd::Constant(1, 1.0))(0) == doctest::Approx(2.0).epsilon(1e-10));

    const ResidualFn none = [](const Eigen::VectorXd& v) { return Eigen::VectorXd::Constant(1, v(0) * v(0) + 1.0); };
    CHECK_THROWS_AS(newton_solve(none, Eigen::VectorXd::Constant(1, 1.0)), SolverError);
}

TEST_CASE("benzene reactor steady state") {
    const auto model = make_benzene_cstr({benzene_calibrated_molar_volumes()});
    const Eigen::VectorXd th = benzene_theta_bar();
    for (double ff : {60.0, 65.0, 70.0}) {
        for (double v : {10.0, 15.0, 20.0}) {
            const Eigen::Vector2d x(ff, v);
            const Eigen::VectorXd s = model->solve_state(x, th);
            CHECK(s(0) + s(1) + s(2) == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(model->residual(s, x, th).norm() < 1e-8);
            for (int i = 0; i < 3; ++i) CHECK(s(i) >= 0.0);
            // A different starting point converges to the same root.
            Eigen::VectorXd other(4);
            other << 0.9, 0.05, 0.05, ff * 1.2;
            CHECK((model->solve_state(x, th, other) - s).norm() < 1e-8);
        }
    }
    CHECK(model->input_names() == std::vector<std::string>{"F_f", "V"});
    CHECK_THROWS_AS(make_benzene_cstr({{1.0, 0.0, 1.0}}), InvalidInput);
}

TEST_CASE("RK4 examples") {
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    const OdeRhs zero = [](const Eigen::VectorXd&, Eigen::VectorXd& ds) { ds = Eigen::VectorXd::Zero(1); };
    CHECK(rk4_integrate(zero, one, 3.0, 10.0)(0) == doctest::Approx(1.0));
    const OdeRhs grow = [](const Eigen::VectorXd& s, Eigen::VectorXd& ds) { ds = s; };
    CHECK(rk4_integrate(grow, one, 1.0, 100.0)(0) == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
    const OdeRhs decay = [](const Eigen::VectorXd& s, Eigen::VectorXd& ds) { ds = -s; };
    CHECK(rk4_integrate(decay, one, 2.0, 100.0)(0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
    CHECK(rk4_integrate(decay, one, 0.0, 100.0)(0) == 1.0);
    CHECK_THROWS_AS(rk4_integrate(decay, one, -1.0, 100.0), InvalidInput);
    const OdeRhs blow = [](const Eigen::VectorXd& s, Eigen::VectorXd& ds) { ds = s.array().square() * 1e300; };
    CHECK_THROWS_AS(rk4_integrate(blow, one, 1.0, 10.0), IntegrationError);

    // Fourth-order convergence: halving the step divides the error by about 16.
    const double e1 = std::abs(rk4_integrate(grow, one, 1.0, 10.0)(0) - std::exp(1.0));
    const double e2 = std::abs(rk4_integrate(grow, one, 1.0, 20.0)(0) - std::exp(1.0));
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.1));

    const OdeModel m = scalar_ode(-0.5, 50.0);
    CHECK(m.predict(Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Zero(1))(0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
}

TEST_CASE("Williams-Otto integration is resolved at the default step") {
    const auto model = make_williams_otto();
    const Eigen::VectorXd th = williams_otto_theta_bar();
    const auto fine = model->with_steps_per_unit(2.0 * model->steps_per_unit());
    for (double ff : {20.0, 23.0})
        for (double temp : {550.0, 600.0})
            for (double t : {2.0, 20.0}) {
                const Eigen::Vector3d x(ff, temp, t);
                const Eigen::VectorXd y1 = model->predict(x, th);
                const Eigen::VectorXd y2 = fine.predict(x, th);
                CHECK(y1.allFinite());
                CHECK((y1 - y2).norm() <= 1e-6 * (1 + y2.norm()));
            }
    CHECK_THROWS_AS(model->predict(Eigen::Vector3d(20, 550, 25), th), InvalidInput);
}

TEST_CASE("grids") {
    const std::vector<GridAxis> axes{{60, 70, 101}, {10, 20, 101}};
    const auto pts = make_grid(axes);
    CHECK(pts.size() == 10201);
    CHECK(pts.front()(0) == 60.0);
    CHECK(pts.front()(1) == 10.0);
    CHECK(pts[1](1) == doctest::Approx(10.1));
    CHECK(pts.back()(0) == 70.0);
    CHECK(pts.back()(1) == 20.0);
    CHECK(grid_corners(axes).size() == 4);
    const std::vector<GridAxis> degenerate{{1, 1, 1}, {0, 1, 3}};
    CHECK(make_grid(degenerate).size() == 3);
    CHECK(grid_corners(degenerate).size() == 2);
    const std::vector<GridAxis> bad{{0, 1, 0}};
    CHECK_THROWS_AS(make_grid(bad), InvalidInput);
    const std::vector<GridAxis> flat{{1, 1, 3}};
    CHECK_THROWS_AS(make_grid(flat), InvalidInput);
    CHECK_THROWS_AS(make_grid(std::vector<GridAxis>{}), InvalidInput);
}

TEST_CASE("atom construction collects every failure") {
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i <= 10; ++i) pts.push_back(Eigen::VectorXd::Constant(1, i / 10.0));
    try {
        build_atoms(PartialModel(), NoiseSpec::identity(2), pts, Eigen::Vector2d(1, 2));
        FAIL("expected AtomBuildError");
    } catch (const AtomBuildError& e) {
        CHECK(e.indices() == std::vector<std::size_t>{6, 7, 8, 9, 10});
    }
    BuildOptions threaded;
    threaded.threads = 3;
    pts.resize(6);
    const DesignSpace a = build_atoms(PartialModel(), NoiseSpec::identity(2), pts, Eigen::Vector2d(1, 2));
    const DesignSpace b = build_atoms(PartialModel(), NoiseSpec::identity(2), pts, Eigen::Vector2d(1, 2), threaded);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(frob_norm(a.atom(i) - b.atom(i)) == 0.0);
}

TEST_CASE("model registry") {
    const auto names = registered_models();
    for (const std::string n : {"linear", "benzene_cstr", "williams_otto"})
        CHECK(std::find(names.begin(), names.end(), n) != names.end());
    CHECK_THROWS_AS(make_model("nope", nlohmann::json::object()), InvalidInput);
    CHECK_THROWS_AS(make_model("linear", {{"bogus", 1}}), InvalidInput);
    const auto mi = make_model("linear", {{"inputs", 1}, {"degree", 2}});
    CHECK(mi.model->d_theta() == 3);
    register_model("custom_test", [](const nlohmann::json&) {
        ModelInstance m;
        m.model = std::make_shared<QuadraticModel>();
        return m;
    });
    CHECK(make_model("custom_test", nlohmann::json::object()).model->d_y() == 2);
}

}
