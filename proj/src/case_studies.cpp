#include "oed/case_studies.hpp"

#include "oed/errors.hpp"

#include <cmath>

namespace oed {

std::shared_ptr<ImplicitAlgebraicModel> make_benzene_cstr(const BenzeneConstants& c) {
    for (double v : c.molar_volumes)
        if (!(v > 0)) throw InvalidInput("benzene model: molar volumes must be positive");
    const auto v = c.molar_volumes;
    auto g = [v](const Eigen::VectorXd& s, const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
        const double ff = x(0);
        const double vol = x(1);
        const double d = v[0] * s(0) + v[1] * s(1) + v[2] * s(2);
        const double r1 = th(0) * s(0) * vol / d;
        const double r2 = th(1) * s(1) * vol / d;
        Eigen::VectorXd r(4);
        r(0) = ff - s(0) * s(3) - r1;
        r(1) = -s(1) * s(3) + r1 - r2;
        r(2) = -s(2) * s(3) + r2;
        r(3) = s(0) + s(1) + s(2) - 1.0;
        return r;
    };
    auto h = [](const Eigen::VectorXd& s) { return Eigen::VectorXd(s.head(3)); };
    auto init = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd s(4);
        s << 0.5, 0.3, 0.2, x(0);
        return s;
    };
    return std::make_shared<ImplicitAlgebraicModel>(2, 2, 3, g, h, init, NewtonSettings{},
                                                    std::vector<std::string>{"F_f", "V"});
}

Eigen::VectorXd benzene_theta_bar() {
    Eigen::VectorXd t(2);
    t << 0.4, 0.0555;
    return t;
}

std::array<double, 3> benzene_calibrated_molar_volumes() { return {0.08938, 0.10179, 0.11304}; }

std::shared_ptr<OdeModel> make_williams_otto(const WilliamsOttoConstants& c) {
    if (!(c.horizon > 0)) throw InvalidInput("Williams-Otto model: horizon must be positive");
    const double ffa = c.f_fa;
    const double mu = c.mu;
    const double eta = c.eta;
    auto factory = [ffa, mu, eta](const Eigen::VectorXd& x, const Eigen::VectorXd& th) -> OdeRhs {
        const double ffb = x(0);
        const double temp = x(1);
        const double k1 = th(0) * std::exp(-th(1) / temp);
        const double k2 = th(2) * std::exp(-th(3) / temp);
        const double k3 = th(4) * std::exp(-th(5) / temp);
        const double cflow = (1.0 - eta) * mu - mu;
        return [=](const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
            const double d = s(0) + s(1) + s(2) + s(3) + s(4) + s(5);
            const double q1 = k1 * s(0) * s(1) / d;
            const double q2 = k2 * s(1) * s(2) / d;
            const double q3 = k3 * s(2) * s(4) / d;
            ds(0) = ffa + cflow * s(0) / d - q1;
            ds(1) = ffb + cflow * s(1) / d - q1 - q2;
            ds(2) = cflow * s(2) / d + 2.0 * q1 - 2.0 * q2 - q3;
            ds(3) = cflow * s(3) / d + 2.0 * q2;
            ds(4) = 0.1 * (1.0 - eta) * mu * s(3) / d - mu * s(4) / d + q2 - 0.5 * q3;
            ds(5) = -mu * s(5) / d + 1.5 * q3;
        };
    };
    Eigen::VectorXd s0(6);
    for (int i = 0; i < 6; ++i) s0(i) = c.s0[static_cast<std::size_t>(i)];
    auto h = [](const Eigen::VectorXd& s) { return Eigen::VectorXd(s.segment(3, 3)); };
    auto t_meas = [](const Eigen::VectorXd& x) { return x(2); };
    return std::make_shared<OdeModel>(3, 6, 3, factory, s0, h, t_meas, c.steps_per_unit, c.horizon,
                                      std::vector<std::string>{"F_fB", "T", "t_meas"});
}

Eigen::VectorXd williams_otto_theta_bar(const WilliamsOttoConstants& c) {
    Eigen::VectorXd t(6);
    t << c.a[0], c.b[0], c.a[1], c.b[1], c.a[2], c.b[2];
    return t;
}

} // namespace oed
