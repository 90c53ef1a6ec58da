#pragma once

#include "oed/design_space.hpp"
#include "oed/matcone.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace oed {

// Prediction model f(x, theta).
class Model {
public:
    virtual ~Model() = default;
    virtual int d_x() const = 0;
    virtual int d_theta() const = 0;
    virtual int d_y() const = 0;
    virtual Eigen::VectorXd predict(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const = 0;
    // Analytic d_y x d_theta Jacobian, when available.
    virtual bool has_analytic_jacobian() const { return false; }
    virtual Eigen::MatrixXd jacobian_theta(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const;
    virtual std::vector<std::string> input_names() const;
};

// Measurement noise covariance, positive definite.
class NoiseSpec {
public:
    explicit NoiseSpec(const SymMatrix& covariance);
    static NoiseSpec identity(int d_y);
    const SymMatrix& covariance() const noexcept { return cov_; }
    const SymMatrix& precision() const noexcept { return prec_; }

private:
    SymMatrix cov_;
    SymMatrix prec_;
};

// Central differences with step h_rel * max(1, |theta_j|) per column.
Eigen::MatrixXd jacobian_theta_fd(const Model& model, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& theta, double h_rel = 1e-6);

enum class JacobianScaling {
    absolute, // D_theta f
    relative, // D_theta f * diag(|theta_bar|), i.e. derivatives w.r.t. log-parameters
};

struct AtomOptions {
    double h_rel = 1e-6;
    JacobianScaling scaling = JacobianScaling::absolute;
    bool use_analytic = true;
};

// J^T sigma^{-1} J at (x, theta_bar).
SymMatrix atom(const Model& model, const NoiseSpec& noise, const Eigen::VectorXd& x,
               const Eigen::VectorXd& theta_bar, const AtomOptions& options = {});

// Throws InvalidInput if the analytic Jacobian and finite differences disagree
// beyond tol (relative, Frobenius) at any probe.
void validate_analytic_jacobian(const Model& model, std::span<const Eigen::VectorXd> probes,
                                const Eigen::VectorXd& theta, double tol = 1e-5);

// f(x, theta) = c(x) + J(x) theta.
class LinearModel : public Model {
public:
    using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
    using OffsetFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
    LinearModel(int d_x, int d_theta, int d_y, JacobianFn j, OffsetFn c = {});
    int d_x() const override { return dx_; }
    int d_theta() const override { return dt_; }
    int d_y() const override { return dy_; }
    Eigen::VectorXd predict(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const override;
    bool has_analytic_jacobian() const override { return true; }
    Eigen::MatrixXd jacobian_theta(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const override;

private:
    int dx_, dt_, dy_;
    JacobianFn j_;
    OffsetFn c_;
};

struct NewtonSettings {
    double tol = 1e-10;
    int max_iter = 50;
    double fd_step = 1e-7;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& s)>;

// Damped Newton iteration with a finite-difference Jacobian.
Eigen::VectorXd newton_solve(const ResidualFn& g, const Eigen::VectorXd& s_init,
                             const NewtonSettings& settings = {});

// Output h(s) of the state solving g(s, x, theta) = 0.
class ImplicitAlgebraicModel : public Model {
public:
    using Residual = std::function<Eigen::VectorXd(const Eigen::VectorXd& s, const Eigen::VectorXd& x,
                                                   const Eigen::VectorXd& theta)>;
    using Output = std::function<Eigen::VectorXd(const Eigen::VectorXd& s)>;
    using InitialGuess = std::function<Eigen::VectorXd(const Eigen::VectorXd& x)>;

    ImplicitAlgebraicModel(int d_x, int d_theta, int d_y, Residual g, Output h, InitialGuess s_init,
                           NewtonSettings settings = {}, std::vector<std::string> names = {});

    int d_x() const override { return dx_; }
    int d_theta() const override { return dt_; }
    int d_y() const override { return dy_; }
    Eigen::VectorXd predict(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const override;
    std::vector<std::string> input_names() const override;

    Eigen::VectorXd solve_state(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const;
    Eigen::VectorXd solve_state(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& s_init) const;
    Eigen::VectorXd residual(const Eigen::VectorXd& s, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& theta) const {
        return g_(s, x, theta);
    }
    const NewtonSettings& settings() const noexcept { return settings_; }

private:
    int dx_, dt_, dy_;
    Residual g_;
    Output h_;
    InitialGuess init_;
    NewtonSettings settings_;
    std::vector<std::string> names_;
};

Eigen::VectorXd newton_solve(const ImplicitAlgebraicModel& model, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& theta);

// Autonomous right-hand side with inputs and parameters already bound.
using OdeRhs = std::function<void(const Eigen::VectorXd& s, Eigen::VectorXd& ds)>;

// Output h(s(t_meas)) of s' = g(s, x, theta), s(0) = s0.
class OdeModel : public Model {
public:
    using RhsFactory = std::function<OdeRhs(const Eigen::VectorXd& x, const Eigen::VectorXd& theta)>;
    using Output = std::function<Eigen::VectorXd(const Eigen::VectorXd& s)>;
    using MeasurementTime = std::function<double(const Eigen::VectorXd& x)>;

    OdeModel(int d_x, int d_theta, int d_y, RhsFactory rhs, Eigen::VectorXd s0, Output h,
             MeasurementTime t_meas, double steps_per_unit = 100.0,
             double horizon = std::numeric_limits<double>::infinity(),
             std::vector<std::string> names = {});

    int d_x() const override { return dx_; }
    int d_theta() const override { return dt_; }
    int d_y() const override { return dy_; }
    Eigen::VectorXd predict(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const override;
    std::vector<std::string> input_names() const override;

    OdeRhs bind(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const { return rhs_(x, theta); }
    const Eigen::VectorXd& initial_state() const noexcept { return s0_; }
    double steps_per_unit() const noexcept { return steps_per_unit_; }
    double horizon() const noexcept { return horizon_; }
    OdeModel with_steps_per_unit(double steps) const;

private:
    int dx_, dt_, dy_;
    RhsFactory rhs_;
    Eigen::VectorXd s0_;
    Output h_;
    MeasurementTime t_meas_;
    double steps_per_unit_;
    double horizon_;
    std::vector<std::string> names_;
};

// Classical RK4 with ceil(t_end * steps_per_unit) equal steps.
Eigen::VectorXd rk4_integrate(const OdeModel& model, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& theta, double t_end);
Eigen::VectorXd rk4_integrate(const OdeRhs& rhs, const Eigen::VectorXd& s0, double t_end,
                              double steps_per_unit);

// Cartesian grid with equidistant points per dimension; the first dimension varies slowest.
struct GridAxis {
    double min = 0.0;
    double max = 0.0;
    int count = 1;
};
std::vector<Eigen::VectorXd> make_grid(std::span<const GridAxis> axes);
// The 2^{d_x} extreme points of the grid box.
std::vector<Eigen::VectorXd> grid_corners(std::span<const GridAxis> axes);

struct BuildOptions {
    AtomOptions atom;
    int threads = 1;
};

// One atom per point. Points whose evaluation fails are reported together.
DesignSpace build_atoms(const Model& model, const NoiseSpec& noise, std::vector<Eigen::VectorXd> points,
                        const Eigen::VectorXd& theta_bar, const BuildOptions& options = {});

} // namespace oed
