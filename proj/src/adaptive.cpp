#include "oed/adaptive.hpp"

#include "oed/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace oed {

std::string to_string(Variant v) {
    switch (v) {
    case Variant::no_exchange_strict:
        return "no_exchange_strict";
    case Variant::no_exchange_relaxed:
        return "no_exchange_relaxed";
    case Variant::exchange_strict:
        return "exchange_strict";
    case Variant::exchange_relaxed:
        return "exchange_relaxed";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    for (auto v : {Variant::no_exchange_strict, Variant::no_exchange_relaxed, Variant::exchange_strict,
                   Variant::exchange_relaxed})
        if (to_string(v) == s) return v;
    throw InvalidInput("unknown algorithm variant '" + s +
                       "' (no_exchange_strict, no_exchange_relaxed, exchange_strict, exchange_relaxed)");
}

bool is_strict(Variant v) { return v == Variant::no_exchange_strict || v == Variant::exchange_strict; }

bool is_exchange(Variant v) { return v == Variant::exchange_strict || v == Variant::exchange_relaxed; }

double ToleranceSchedule::delta_bar(int k) const {
    switch (bar_rule) {
    case BarRule::zero:
        return 0.0;
    case BarRule::constant:
        return bar_c;
    case BarRule::quadratic_decay:
        return bar_c / ((k + 1.0) * (k + 1.0));
    }
    return 0.0;
}

double ToleranceSchedule::delta_under(int k) const {
    switch (under_rule) {
    case UnderRule::zero:
        return 0.0;
    case UnderRule::constant:
        return under_c;
    case UnderRule::harmonic_decay:
        return under_c / (k + 2.0);
    }
    return 0.0;
}

double ToleranceSchedule::sup_delta_bar() const { return bar_rule == BarRule::zero ? 0.0 : bar_c; }

double ToleranceSchedule::sup_delta_under() const {
    switch (under_rule) {
    case UnderRule::zero:
        return 0.0;
    case UnderRule::constant:
        return under_c;
    case UnderRule::harmonic_decay:
        return under_c / 2.0;
    }
    return 0.0;
}

double ToleranceSchedule::limsup_delta_bar() const { return bar_rule == BarRule::constant ? bar_c : 0.0; }

double ToleranceSchedule::limsup_delta_under() const { return under_rule == UnderRule::constant ? under_c : 0.0; }

bool ToleranceSchedule::termination_guaranteed() const {
    return eps > limsup_delta_bar() + limsup_delta_under();
}

bool ToleranceSchedule::delta_bar_summable() const { return bar_rule != BarRule::constant || bar_c == 0.0; }

void ToleranceSchedule::validate() const {
    if (!(eps >= 0) || !std::isfinite(eps)) throw InvalidInput("eps must be a finite non-negative number");
    if (!(bar_c >= 0) || !std::isfinite(bar_c)) throw InvalidInput("delta_bar constant must be >= 0");
    if (!(under_c >= 0) || !std::isfinite(under_c)) throw InvalidInput("delta_under constant must be >= 0");
}

Violator worst_violator(const DesignSpace& space, const CriterionSpec& spec, const SymMatrix& m, double) {
    const SensitivityField field(spec, m);
    Violator v{0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < space.size(); ++i) {
        const double p = field.at(space.atom(i));
        if (p < v.psi) v = {i, p};
    }
    return v;
}

std::optional<std::size_t> any_violator(const DesignSpace& space, const CriterionSpec& spec, const SymMatrix& m,
                                        double eps, std::span<const std::size_t> scan_order) {
    const SensitivityField field(spec, m);
    if (scan_order.empty()) {
        for (std::size_t i = 0; i < space.size(); ++i)
            if (field.at(space.atom(i)) < -eps) return i;
        return std::nullopt;
    }
    if (scan_order.size() != space.size()) throw InvalidInput("scan order must be a permutation of the space");
    for (auto i : scan_order) {
        if (i >= space.size()) throw InvalidInput("scan order index outside the design space");
        if (field.at(space.atom(i)) < -eps) return i;
    }
    return std::nullopt;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::mt19937_64 rng(seed);
    // Fisher-Yates with explicit modular draws so the result does not depend on the
    // standard library's distribution implementation.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

RunResult run(const DesignSpace& space, const CriterionSpec& spec, Variant variant, std::span<const std::size_t> x0,
              const ToleranceSchedule& schedule, const RunCaps& caps, const RunOptions& options) {
    schedule.validate();
    spec.validate(space.dim());
    if (!spec.smooth())
        throw InvalidInput("criterion " + spec.name() + " has no continuous sensitivity function; "
                           "it is available for evaluation and certification only");
    if (caps.max_outer < 1) throw InvalidInput("max_outer must be >= 1");
    if (x0.empty()) throw InvalidInput("initial discretization X0 is empty");
    std::vector<std::size_t> x(x0.begin(), x0.end());
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    if (x.back() >= space.size()) throw InvalidInput("X0 index outside the design space");

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    RunResult out;
    out.trace.algorithm = to_string(variant);
    out.trace.criterion = spec.name();
    out.trace.eps = schedule.eps;
    std::optional<Design> warm;
    std::optional<Design> best;
    ExtReal best_value = kInfinity;

    for (int k = 0;; ++k) {
        SolveSettings settings = options.solver;
        settings.delta_bar = schedule.delta_bar(k);
        SolveResult sol;
        try {
            sol = solve_weights(space, x, spec, settings, warm);
        } catch (const InfeasibleStart&) {
            if (k == 0) {
                out.trace.set_status(RunStatus::infeasible);
                return out;
            }
            throw;
        }
        const Design& xi = sol.design;
        const SymMatrix m = info_matrix(space, xi);
        const double du = schedule.delta_under(k);

        IterationRecord rec;
        rec.k = k;
        rec.psi = sol.value;
        rec.gap = sol.certificate.gap;
        rec.n_active = x.size();
        rec.n_support = xi.size();
        rec.delta_bar = settings.delta_bar;
        rec.delta_under = du;

        bool done = false;
        std::optional<std::size_t> next;
        if (is_strict(variant)) {
            const Violator v = worst_violator(space, spec, m, du);
            rec.violator = static_cast<long>(v.index);
            rec.violator_psi = v.psi;
            done = v.psi >= -schedule.eps + du;
            next = v.index;
        } else {
            next = any_violator(space, spec, m, schedule.eps, options.scan_order);
            if (next) {
                rec.violator = static_cast<long>(*next);
                rec.violator_psi = sensitivity(spec, m, space.atom(*next));
            }
            done = !next.has_value();
        }
        rec.wall_seconds = elapsed();
        out.trace.add(rec);
        if (options.keep_iterates) out.iterates.push_back(xi);
        out.last_certificate = sol.certificate;
        if (sol.value < best_value || !best) {
            best_value = sol.value;
            best = xi;
        }

        if (done) {
            out.trace.set_status(RunStatus::terminated_eps_optimal);
            out.design = xi;
            break;
        }
        if (k + 1 >= caps.max_outer || elapsed() > caps.wall_limit_seconds) {
            out.trace.set_status(RunStatus::iteration_cap);
            out.design = *best;
            break;
        }
        const bool exchange = is_exchange(variant) &&
                              !(variant == Variant::exchange_relaxed && options.literal_update);
        if (exchange) {
            const Design pruned = prune(xi, options.solver.w_min);
            x = pruned.support();
            warm = pruned;
        } else {
            warm = xi;
        }
        if (std::find(x.begin(), x.end(), *next) == x.end()) {
            x.push_back(*next);
            std::sort(x.begin(), x.end());
        }
    }
    out.trace.final_min_sensitivity = worst_violator(space, spec, info_matrix(space, out.design)).psi;
    return out;
}

int iteration_bound_sublinear(double psi1_minus_lb, double lipschitz, double diam, double c_bar, double c_under,
                              double eps, double delta_under_sup) {
    if (!(eps > delta_under_sup)) throw InvalidInput("iteration bound requires eps > sup delta_under");
    if (psi1_minus_lb < 0 || lipschitz < 0 || diam < 0 || c_bar < 0 || c_under < 0)
        throw InvalidInput("iteration bound inputs must be non-negative");
    const double c_prime = lipschitz * diam * diam / 2.0 + (c_bar + c_under) / 2.0;
    const double num = 2.0 * (psi1_minus_lb + 2.0 * c_prime);
    const double room = eps - delta_under_sup;
    auto ok = [&](long k) { return num / (static_cast<double>(k) + 2.0) <= room; };
    long k = std::max(2L, static_cast<long>(std::ceil(num / room - 2.0)));
    while (k > 2 && ok(k - 1)) --k;
    while (!ok(k)) ++k;
    return static_cast<int>(k);
}

int iteration_bound_linear(double h0, double r, double eps) {
    if (!(r > 0 && r < 1)) throw InvalidInput("linear rate r must lie in (0, 1)");
    if (!(eps > 0)) throw InvalidInput("eps must be positive");
    if (!(h0 >= 0)) throw InvalidInput("h0 must be non-negative");
    if (h0 <= eps) return 0;
    long k = std::max(0L, static_cast<long>(std::ceil(std::log(eps / h0) / std::log(r))));
    auto ok = [&](long j) { return std::pow(r, static_cast<double>(j)) * h0 <= eps; };
    while (k > 0 && ok(k - 1)) --k;
    while (!ok(k)) ++k;
    return static_cast<int>(k);
}

} // namespace oed
