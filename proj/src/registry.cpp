#include "oed/registry.hpp"

#include "oed/case_studies.hpp"
#include "oed/errors.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <set>

namespace oed {

namespace {

using nlohmann::json;

void reject_unknown(const std::string& model, const json& c, const std::set<std::string>& allowed) {
    if (c.is_null()) return;
    if (!c.is_object()) throw InvalidInput("model '" + model + "': constants must be an object");
    for (const auto& [key, _] : c.items())
        if (!allowed.count(key))
            throw InvalidInput("model '" + model + "': unknown constant '" + key + "'");
}

template <typename T>
T get_or(const json& c, const std::string& key, T fallback) {
    if (c.is_object() && c.contains(key)) return c.at(key).get<T>();
    return fallback;
}

// Exponent vectors of all monomials of total degree <= degree in n variables,
// ordered by degree, then lexicographically descending.
std::vector<std::vector<int>> monomials(int n, int degree) {
    std::vector<std::vector<int>> out;
    for (int deg = 0; deg <= degree; ++deg) {
        std::vector<int> e(static_cast<std::size_t>(n), 0);
        std::function<void(int, int)> rec = [&](int var, int left) {
            if (var == n - 1) {
                e[static_cast<std::size_t>(var)] = left;
                out.push_back(e);
                return;
            }
            for (int k = left; k >= 0; --k) {
                e[static_cast<std::size_t>(var)] = k;
                rec(var + 1, left - k);
            }
        };
        rec(0, deg);
    }
    return out;
}

ModelInstance make_linear(const json& c) {
    reject_unknown("linear", c, {"basis", "degree", "inputs", "size"});
    const std::string basis = get_or<std::string>(c, "basis", "polynomial");
    ModelInstance mi;
    if (basis == "polynomial") {
        const int inputs = get_or<int>(c, "inputs", 1);
        const int degree = get_or<int>(c, "degree", 1);
        if (inputs < 1 || degree < 0) throw InvalidInput("model 'linear': need inputs >= 1, degree >= 0");
        const auto mons = monomials(inputs, degree);
        const int p = static_cast<int>(mons.size());
        auto j = [mons, p](const Eigen::VectorXd& x) {
            Eigen::MatrixXd row(1, p);
            for (int k = 0; k < p; ++k) {
                double v = 1.0;
                for (std::size_t i = 0; i < mons[static_cast<std::size_t>(k)].size(); ++i)
                    v *= std::pow(x(static_cast<Eigen::Index>(i)), mons[static_cast<std::size_t>(k)][i]);
                row(0, k) = v;
            }
            return row;
        };
        mi.model = std::make_shared<LinearModel>(inputs, p, 1, j);
        mi.effective_constants = {{"basis", basis}, {"inputs", inputs}, {"degree", degree}};
    } else if (basis == "indicator") {
        // x in {1, ..., size}; the response observes parameter x.
        const int size = get_or<int>(c, "size", 2);
        if (size < 1) throw InvalidInput("model 'linear': indicator basis needs size >= 1");
        auto j = [size](const Eigen::VectorXd& x) {
            const double r = std::round(x(0));
            if (std::abs(x(0) - r) > 1e-9 || r < 1 || r > size)
                throw ModelEvaluationError("indicator basis: input must be an integer in [1, size]");
            Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, size);
            row(0, static_cast<Eigen::Index>(r) - 1) = 1.0;
            return row;
        };
        mi.model = std::make_shared<LinearModel>(1, size, 1, j);
        mi.effective_constants = {{"basis", basis}, {"size", size}};
    } else {
        throw InvalidInput("model 'linear': unknown basis '" + basis + "' (polynomial, indicator)");
    }
    mi.default_theta_bar = Eigen::VectorXd::Ones(mi.model->d_theta());
    return mi;
}

ModelInstance make_benzene(const json& c) {
    reject_unknown("benzene_cstr", c, {"molar_volumes"});
    BenzeneConstants bc;
    if (c.is_object() && c.contains("molar_volumes")) {
        const auto v = c.at("molar_volumes").get<std::vector<double>>();
        if (v.size() != 3) throw InvalidInput("model 'benzene_cstr': molar_volumes needs 3 values");
        bc.molar_volumes = {v[0], v[1], v[2]};
    }
    ModelInstance mi;
    mi.model = make_benzene_cstr(bc);
    mi.default_theta_bar = benzene_theta_bar();
    mi.effective_constants = {{"molar_volumes", bc.molar_volumes}};
    return mi;
}

ModelInstance make_wo(const json& c) {
    reject_unknown("williams_otto", c,
                   {"a", "b", "F_fA", "mu", "eta", "s0", "steps_per_unit", "horizon"});
    WilliamsOttoConstants w;
    auto arr3 = [&](const char* key, std::array<double, 3>& dst) {
        if (!c.is_object() || !c.contains(key)) return;
        const auto v = c.at(key).get<std::vector<double>>();
        if (v.size() != 3) throw InvalidInput(std::string("model 'williams_otto': ") + key + " needs 3 values");
        dst = {v[0], v[1], v[2]};
    };
    arr3("a", w.a);
    arr3("b", w.b);
    if (c.is_object() && c.contains("s0")) {
        const auto v = c.at("s0").get<std::vector<double>>();
        if (v.size() != 6) throw InvalidInput("model 'williams_otto': s0 needs 6 values");
        std::copy(v.begin(), v.end(), w.s0.begin());
    }
    w.f_fa = get_or<double>(c, "F_fA", w.f_fa);
    w.mu = get_or<double>(c, "mu", w.mu);
    w.eta = get_or<double>(c, "eta", w.eta);
    w.steps_per_unit = get_or<double>(c, "steps_per_unit", w.steps_per_unit);
    w.horizon = get_or<double>(c, "horizon", w.horizon);
    ModelInstance mi;
    mi.model = make_williams_otto(w);
    mi.default_theta_bar = williams_otto_theta_bar(w);
    mi.effective_constants = {{"a", w.a},     {"b", w.b},   {"F_fA", w.f_fa},
                              {"mu", w.mu},   {"eta", w.eta}, {"s0", w.s0},
                              {"steps_per_unit", w.steps_per_unit}, {"horizon", w.horizon}};
    return mi;
}

struct Registry {
    std::mutex mutex;
    std::map<std::string, ModelFactory> factories{
        {"linear", make_linear}, {"benzene_cstr", make_benzene}, {"williams_otto", make_wo}};
};

Registry& registry() {
    static Registry r;
    return r;
}

} // namespace

void register_model(const std::string& name, ModelFactory factory) {
    if (name.empty() || !factory) throw InvalidInput("model registration needs a name and a factory");
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.factories[name] = std::move(factory);
}

ModelInstance make_model(const std::string& name, const nlohmann::json& constants) {
    ModelFactory f;
    {
        auto& r = registry();
        std::lock_guard lock(r.mutex);
        auto it = r.factories.find(name);
        if (it == r.factories.end()) {
            std::string known;
            for (const auto& [k, _] : r.factories) known += (known.empty() ? "" : ", ") + k;
            throw InvalidInput("unknown model '" + name + "' (registered: " + known + ")");
        }
        f = it->second;
    }
    try {
        return f(constants);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("model '" + name + "': malformed constants: " + e.what());
    }
}

std::vector<std::string> registered_models() {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    std::vector<std::string> names;
    for (const auto& [k, _] : r.factories) names.push_back(k);
    return names;
}

} // namespace oed
