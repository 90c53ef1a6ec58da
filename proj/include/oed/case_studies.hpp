#pragma once

#include "oed/models.hpp"

#include <array>
#include <memory>

namespace oed {

// Stationary CSTR with benzene chlorination kinetics A -> B -> C.
// Inputs x = (F_f, V); parameters theta = (theta_1, theta_2);
// state s = (s_1, s_2, s_3, s_4) with mole fractions s_1..s_3 and outflow s_4;
// output y = (s_1, s_2, s_3).
struct BenzeneConstants {
    // Molar volumes v_A, v_B, v_C. The default is a neutral placeholder.
    std::array<double, 3> molar_volumes{1.0, 1.0, 1.0};
};

std::shared_ptr<ImplicitAlgebraicModel> make_benzene_cstr(const BenzeneConstants& c = {});
Eigen::VectorXd benzene_theta_bar();
// Molar volumes fitted so that the published criterion values are matched.
std::array<double, 3> benzene_calibrated_molar_volumes();

// Williams-Otto batch reactor, masses s_1..s_6 of A, B, C, E, G, P.
// Inputs x = (F_fB, T, t_meas); parameters theta = (a_1, b_1, a_2, b_2, a_3, b_3)
// with rate constants k_i = a_i exp(-b_i / T); output y = (s_4, s_5, s_6).
struct WilliamsOttoConstants {
    // Placeholder kinetics that keep the fixed-step integration non-stiff.
    std::array<double, 3> a{1.6599e6, 7.2117e6, 2.6745e10};
    std::array<double, 3> b{6666.7, 8333.3, 11111.0};
    double f_fa = 10.0;
    double mu = 129.5;
    double eta = 0.2;
    std::array<double, 6> s0{10.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    double steps_per_unit = 100.0;
    double horizon = 20.0;
};

std::shared_ptr<OdeModel> make_williams_otto(const WilliamsOttoConstants& c = {});
Eigen::VectorXd williams_otto_theta_bar(const WilliamsOttoConstants& c = {});

} // namespace oed
