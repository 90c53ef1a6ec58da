#include "oed/models.hpp"

#include "oed/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace oed {

namespace {

std::string vec_str(const Eigen::VectorXd& v) {
    std::ostringstream os;
    os.precision(10);
    os << "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
    os << ")";
    return os.str();
}

std::vector<std::string> default_names(int n) {
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
    return names;
}

} // namespace

Eigen::MatrixXd Model::jacobian_theta(const Eigen::VectorXd&, const Eigen::VectorXd&) const {
    throw InvalidInput("model has no analytic Jacobian");
}

std::vector<std::string> Model::input_names() const { return default_names(d_x()); }

NoiseSpec::NoiseSpec(const SymMatrix& covariance) : cov_(covariance) {
    const Spectrum s = eig_sym(covariance);
    if (!(s.eigenvalues(0) > default_pd_tol(s)))
        throw InvalidInput("noise covariance must be positive definite");
    prec_ = mat_pow_neg(s, 1.0);
}

NoiseSpec NoiseSpec::identity(int d_y) { return NoiseSpec(SymMatrix::identity(d_y)); }

Eigen::MatrixXd jacobian_theta_fd(const Model& model, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& theta, double h_rel) {
    if (!(h_rel > 0)) throw InvalidInput("finite-difference step must be positive");
    Eigen::MatrixXd j(model.d_y(), theta.size());
    for (Eigen::Index c = 0; c < theta.size(); ++c) {
        const double h = h_rel * std::max(1.0, std::abs(theta(c)));
        Eigen::VectorXd tp = theta, tm = theta;
        tp(c) += h;
        tm(c) -= h;
        const Eigen::VectorXd fp = model.predict(x, tp);
        const Eigen::VectorXd fm = model.predict(x, tm);
        if (!fp.allFinite() || !fm.allFinite())
            throw ModelEvaluationError("non-finite prediction at x = " + vec_str(x) +
                                       ", theta = " + vec_str(theta));
        j.col(c) = (fp - fm) / (tp(c) - tm(c));
    }
    return j;
}

SymMatrix atom(const Model& model, const NoiseSpec& noise, const Eigen::VectorXd& x,
               const Eigen::VectorXd& theta_bar, const AtomOptions& options) {
    if (x.size() != model.d_x()) throw InvalidInput("input dimension mismatch");
    if (theta_bar.size() != model.d_theta()) throw InvalidInput("parameter dimension mismatch");
    if (noise.covariance().dim() != model.d_y()) throw InvalidInput("noise dimension mismatch");
    Eigen::MatrixXd j = (options.use_analytic && model.has_analytic_jacobian())
                            ? model.jacobian_theta(x, theta_bar)
                            : jacobian_theta_fd(model, x, theta_bar, options.h_rel);
    if (options.scaling == JacobianScaling::relative) {
        for (Eigen::Index c = 0; c < j.cols(); ++c) {
            const double s = std::abs(theta_bar(c));
            if (s > 0) j.col(c) *= s;
        }
    }
    if (!j.allFinite())
        throw ModelEvaluationError("non-finite Jacobian at x = " + vec_str(x));
    return SymMatrix(Eigen::MatrixXd(j.transpose() * noise.precision().mat() * j));
}

void validate_analytic_jacobian(const Model& model, std::span<const Eigen::VectorXd> probes,
                                const Eigen::VectorXd& theta, double tol) {
    if (!model.has_analytic_jacobian()) return;
    for (const auto& x : probes) {
        const Eigen::MatrixXd ja = model.jacobian_theta(x, theta);
        const Eigen::MatrixXd jf = jacobian_theta_fd(model, x, theta);
        const double err = (ja - jf).norm() / std::max(1.0, ja.norm());
        if (err > tol) {
            std::ostringstream os;
            os << "analytic Jacobian disagrees with finite differences at x = " << vec_str(x)
               << " (relative error " << err << ")";
            throw InvalidInput(os.str());
        }
    }
}

LinearModel::LinearModel(int d_x, int d_theta, int d_y, JacobianFn j, OffsetFn c)
    : dx_(d_x), dt_(d_theta), dy_(d_y), j_(std::move(j)), c_(std::move(c)) {
    if (d_x < 1 || d_theta < 1 || d_y < 1) throw InvalidInput("model dimensions must be positive");
}

Eigen::VectorXd LinearModel::predict(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
    Eigen::VectorXd y = j_(x) * theta;
    if (c_) y += c_(x);
    return y;
}

Eigen::MatrixXd LinearModel::jacobian_theta(const Eigen::VectorXd& x, const Eigen::VectorXd&) const {
    return j_(x);
}

Eigen::VectorXd newton_solve(const ResidualFn& g, const Eigen::VectorXd& s_init,
                             const NewtonSettings& settings) {
    Eigen::VectorXd s = s_init;
    Eigen::VectorXd r = g(s);
    const Eigen::Index n = s.size();
    if (r.size() != n) throw InvalidInput("Newton residual must be square");
    double res = r.allFinite() ? r.lpNorm<Eigen::Infinity>() : std::numeric_limits<double>::infinity();
    if (!std::isfinite(res)) throw SolverError("Newton: residual not finite at the initial guess", res);
    bool converged = res <= settings.tol;
    bool polished = false;
    for (int it = 0; it < settings.max_iter && !polished; ++it) {
        if (converged) polished = true; // one extra step drives the residual to roundoff
        Eigen::MatrixXd jac(n, n);
        for (Eigen::Index c = 0; c < n; ++c) {
            const double h = settings.fd_step * std::max(1.0, std::abs(s(c)));
            Eigen::VectorXd sp = s, sm = s;
            sp(c) += h;
            sm(c) -= h;
            jac.col(c) = (g(sp) - g(sm)) / (sp(c) - sm(c));
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!jac.allFinite() || lu.rank() < n) {
            if (converged) break;
            throw SolverError("Newton: singular residual Jacobian", res);
        }
        const Eigen::VectorXd step = lu.solve(-r);
        double t = 1.0;
        Eigen::VectorXd s_new;
        Eigen::VectorXd r_new;
        double res_new = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 40; ++k) {
            s_new = s + t * step;
            r_new = g(s_new);
            res_new = r_new.allFinite() ? r_new.lpNorm<Eigen::Infinity>()
                                        : std::numeric_limits<double>::infinity();
            if (res_new <= res || (converged && res_new <= settings.tol)) break;
            t *= 0.5;
        }
        if (!(res_new <= res) && !(converged && res_new <= settings.tol)) {
            if (converged) break;
            throw SolverError("Newton: damping failed to reduce the residual", res);
        }
        s = s_new;
        r = r_new;
        res = res_new;
        if (res <= settings.tol) converged = true;
    }
    if (!converged) {
        std::ostringstream os;
        os << "Newton did not converge in " << settings.max_iter << " iterations (residual " << res << ")";
        throw SolverError(os.str(), res);
    }
    return s;
}

ImplicitAlgebraicModel::ImplicitAlgebraicModel(int d_x, int d_theta, int d_y, Residual g, Output h,
                                               InitialGuess s_init, NewtonSettings settings,
                                               std::vector<std::string> names)
    : dx_(d_x), dt_(d_theta), dy_(d_y), g_(std::move(g)), h_(std::move(h)), init_(std::move(s_init)),
      settings_(settings), names_(std::move(names)) {
    if (names_.empty()) names_ = default_names(d_x);
}

Eigen::VectorXd ImplicitAlgebraicModel::solve_state(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                                    const Eigen::VectorXd& s_init) const {
    return newton_solve([&](const Eigen::VectorXd& s) { return g_(s, x, theta); }, s_init, settings_);
}

Eigen::VectorXd ImplicitAlgebraicModel::solve_state(const Eigen::VectorXd& x,
                                                    const Eigen::VectorXd& theta) const {
    return solve_state(x, theta, init_(x));
}

Eigen::VectorXd ImplicitAlgebraicModel::predict(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
    return h_(solve_state(x, theta));
}

std::vector<std::string> ImplicitAlgebraicModel::input_names() const { return names_; }

Eigen::VectorXd newton_solve(const ImplicitAlgebraicModel& model, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& theta) {
    return model.solve_state(x, theta);
}

OdeModel::OdeModel(int d_x, int d_theta, int d_y, RhsFactory rhs, Eigen::VectorXd s0, Output h,
                   MeasurementTime t_meas, double steps_per_unit, double horizon,
                   std::vector<std::string> names)
    : dx_(d_x), dt_(d_theta), dy_(d_y), rhs_(std::move(rhs)), s0_(std::move(s0)), h_(std::move(h)),
      t_meas_(std::move(t_meas)), steps_per_unit_(steps_per_unit), horizon_(horizon),
      names_(std::move(names)) {
    if (!(steps_per_unit > 0)) throw InvalidInput("RK4 steps per time unit must be positive");
    if (names_.empty()) names_ = default_names(d_x);
}

Eigen::VectorXd OdeModel::predict(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) const {
    const double t = t_meas_(x);
    if (!(t >= 0) || t > horizon_) {
        std::ostringstream os;
        os << "measurement time " << t << " outside [0, " << horizon_ << "]";
        throw InvalidInput(os.str());
    }
    return h_(rk4_integrate(rhs_(x, theta), s0_, t, steps_per_unit_));
}

std::vector<std::string> OdeModel::input_names() const { return names_; }

OdeModel OdeModel::with_steps_per_unit(double steps) const {
    OdeModel m = *this;
    if (!(steps > 0)) throw InvalidInput("RK4 steps per time unit must be positive");
    m.steps_per_unit_ = steps;
    return m;
}

Eigen::VectorXd rk4_integrate(const OdeRhs& rhs, const Eigen::VectorXd& s0, double t_end,
                              double steps_per_unit) {
    if (!(t_end >= 0)) throw InvalidInput("integration end time must be non-negative");
    if (!(steps_per_unit > 0)) throw InvalidInput("RK4 steps per time unit must be positive");
    Eigen::VectorXd s = s0;
    if (t_end == 0) return s;
    const auto n = static_cast<long>(std::ceil(t_end * steps_per_unit - 1e-9));
    const double h = t_end / static_cast<double>(n);
    const Eigen::Index d = s.size();
    Eigen::VectorXd k1(d), k2(d), k3(d), k4(d), tmp(d);
    for (long i = 0; i < n; ++i) {
        rhs(s, k1);
        tmp.noalias() = s + (0.5 * h) * k1;
        rhs(tmp, k2);
        tmp.noalias() = s + (0.5 * h) * k2;
        rhs(tmp, k3);
        tmp.noalias() = s + h * k3;
        rhs(tmp, k4);
        s.noalias() += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!s.allFinite()) {
            const double t = h * static_cast<double>(i + 1);
            std::ostringstream os;
            os << "RK4 state became non-finite at t = " << t;
            throw IntegrationError(os.str(), t);
        }
    }
    return s;
}

Eigen::VectorXd rk4_integrate(const OdeModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                              double t_end) {
    return rk4_integrate(model.bind(x, theta), model.initial_state(), t_end, model.steps_per_unit());
}

std::vector<Eigen::VectorXd> make_grid(std::span<const GridAxis> axes) {
    if (axes.empty()) throw InvalidInput("grid needs at least one axis");
    std::vector<std::vector<double>> values;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        const auto& ax = axes[a];
        if (ax.count < 1) throw InvalidInput("grid axis " + std::to_string(a) + ": count must be >= 1");
        if (!(std::isfinite(ax.min) && std::isfinite(ax.max)) || ax.max < ax.min)
            throw InvalidInput("grid axis " + std::to_string(a) + ": requires finite min <= max");
        if (ax.count > 1 && ax.max == ax.min)
            throw InvalidInput("grid axis " + std::to_string(a) + ": count > 1 needs min < max");
        std::vector<double> v;
        for (int i = 0; i < ax.count; ++i) {
            if (ax.count == 1) {
                v.push_back(ax.min);
            } else if (i == ax.count - 1) {
                v.push_back(ax.max);
            } else {
                v.push_back(ax.min + (ax.max - ax.min) * i / (ax.count - 1));
            }
        }
        values.push_back(std::move(v));
    }
    std::vector<Eigen::VectorXd> pts;
    std::vector<int> idx(axes.size(), 0);
    const auto dim = static_cast<Eigen::Index>(axes.size());
    while (true) {
        Eigen::VectorXd p(dim);
        for (Eigen::Index a = 0; a < dim; ++a) p(a) = values[a][idx[a]];
        pts.push_back(p);
        Eigen::Index a = dim - 1;
        while (a >= 0) {
            if (++idx[a] < axes[a].count) break;
            idx[a] = 0;
            --a;
        }
        if (a < 0) break;
    }
    return pts;
}

std::vector<Eigen::VectorXd> grid_corners(std::span<const GridAxis> axes) {
    std::vector<GridAxis> reduced;
    for (const auto& ax : axes) reduced.push_back({ax.min, ax.max, ax.max > ax.min ? 2 : 1});
    return make_grid(reduced);
}

DesignSpace build_atoms(const Model& model, const NoiseSpec& noise, std::vector<Eigen::VectorXd> points,
                        const Eigen::VectorXd& theta_bar, const BuildOptions& options) {
    if (points.empty()) throw InvalidInput("no design points supplied");
    if (model.has_analytic_jacobian() && options.atom.use_analytic) {
        std::vector<Eigen::VectorXd> probes{points.front(), points[points.size() / 2], points.back()};
        validate_analytic_jacobian(model, probes, theta_bar);
    }
    const std::size_t n = points.size();
    std::vector<SymMatrix> atoms(n);
    std::vector<std::string> errors(n);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                atoms[i] = atom(model, noise, points[i], theta_bar, options.atom);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, options.threads));
    if (threads == 1 || n < 2 * threads) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk;
            const std::size_t e = std::min(n, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }
    std::vector<std::size_t> failed;
    std::ostringstream os;
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i].empty()) continue;
        if (failed.size() < 5) os << "\n  point " << i << " " << vec_str(points[i]) << ": " << errors[i];
        failed.push_back(i);
    }
    if (!failed.empty()) {
        std::ostringstream msg;
        msg << "atom construction failed at " << failed.size() << " of " << n << " points" << os.str();
        if (failed.size() > 5) msg << "\n  ...";
        throw AtomBuildError(msg.str(), std::move(failed));
    }
    return DesignSpace(std::move(points), std::move(atoms));
}

} // namespace oed
