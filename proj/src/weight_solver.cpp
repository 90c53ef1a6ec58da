#include "oed/weight_solver.hpp"

#include "oed/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace oed {

namespace {

constexpr int kStallLimit = 50;
constexpr int kNewtonPeriod = 10;

// Rounding allowance when comparing criterion values of successive iterates.
double value_slack(ExtReal v) { return 1e-13 * (1.0 + std::abs(v)); }

struct StepResult {
    double gamma = 0.0;
    ExtReal value = kInfinity;
};

ExtReal eval_along(const CriterionSpec& spec, const SymMatrix& m, const SymMatrix& d, double g) {
    SymMatrix t = m;
    t.add_scaled(d, g);
    return eval(spec, t);
}

std::optional<double> slope_along(const CriterionSpec& spec, const SymMatrix& m, const SymMatrix& d, double g) {
    SymMatrix t = m;
    t.add_scaled(d, g);
    try {
        return frob_inner(grad(spec, t), d);
    } catch (const NonSmoothPoint&) {
        return std::nullopt;
    }
}

// Golden-section search on [0, gmax]; +infinity counts as worse than any finite value.
StepResult golden_section(const CriterionSpec& spec, const SymMatrix& m, const SymMatrix& d, ExtReal v0,
                          double gmax) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = gmax;
    double c = b - r * (b - a), e = a + r * (b - a);
    ExtReal fc = eval_along(spec, m, d, c), fe = eval_along(spec, m, d, e);
    StepResult best{0.0, v0};
    for (int it = 0; it < 200 && b - a > 1e-12 * gmax; ++it) {
        if (fc < best.value) best = {c, fc};
        if (fe < best.value) best = {e, fe};
        if (fc <= fe) {
            b = e;
            e = c;
            fe = fc;
            c = b - r * (b - a);
            fc = eval_along(spec, m, d, c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + r * (b - a);
            fe = eval_along(spec, m, d, e);
        }
    }
    if (fc < best.value) best = {c, fc};
    if (fe < best.value) best = {e, fe};
    return best;
}

// Minimizes phi(g) = Psi(M + g D) on [0, gmax] by bisection on phi'.
StepResult exact_line_search(const CriterionSpec& spec, const SymMatrix& m, const SymMatrix& d, ExtReal v0,
                             double gmax) {
    ExtReal v_hi = eval_along(spec, m, d, gmax);
    if (is_finite_value(v_hi)) {
        const auto s = slope_along(spec, m, d, gmax);
        if (!s) return golden_section(spec, m, d, v0, gmax);
        if (*s <= 0 && v_hi <= v0) return {gmax, v_hi};
    }
    double lo = 0.0, hi = gmax;
    ExtReal v_lo = v0;
    const double tol = 1e-12 * gmax;
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const ExtReal v = eval_along(spec, m, d, mid);
        if (!is_finite_value(v)) {
            hi = mid;
            v_hi = v;
            continue;
        }
        const auto s = slope_along(spec, m, d, mid);
        if (!s) return golden_section(spec, m, d, v0, gmax);
        if (*s < 0) {
            lo = mid;
            v_lo = v;
        } else {
            hi = mid;
            v_hi = v;
        }
    }
    StepResult best{0.0, v0};
    // phi' < 0 on [0, lo] guarantees descent even when it is below the resolution of phi.
    if (lo > 0 && v_lo <= v0 + value_slack(v0)) best = {lo, v_lo};
    if (is_finite_value(v_hi) && v_hi < best.value) best = {hi, v_hi};
    return best;
}

StepResult armijo(const CriterionSpec& spec, const SymMatrix& m, const SymMatrix& d, ExtReal v0, double slope0,
                  double gmax, double beta, double sigma) {
    double g = gmax;
    for (int it = 0; it < 80; ++it) {
        const ExtReal v = eval_along(spec, m, d, g);
        if (is_finite_value(v) && v <= v0 + sigma * g * slope0) return {g, v};
        g *= beta;
    }
    return {0.0, v0};
}

SymMatrix assemble(const DesignSpace& space, const std::vector<std::size_t>& active, const std::vector<double>& w) {
    SymMatrix m = SymMatrix::zero(space.dim());
    for (std::size_t i = 0; i < active.size(); ++i)
        if (w[i] > 0) m.add_scaled(space.atom(active[i]), w[i]);
    return m;
}

Design to_design(const std::vector<std::size_t>& active, const std::vector<double>& w) {
    std::vector<Design::Entry> e;
    for (std::size_t i = 0; i < active.size(); ++i)
        if (w[i] > 0) e.push_back({active[i], w[i]});
    return Design(std::move(e));
}

std::vector<std::size_t> normalize_active(const DesignSpace& space, std::span<const std::size_t> active) {
    if (active.empty()) throw InvalidInput("active set is empty");
    std::vector<std::size_t> a(active.begin(), active.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    if (a.back() >= space.size()) throw InvalidInput("active index outside the design space");
    return a;
}

// Divided differences of f' on the spectrum for Psi(M) = tr f(M).
Eigen::MatrixXd spectral_kernel(double p, const Eigen::VectorXd& lam) {
    const Eigen::Index d = lam.size();
    Eigen::MatrixXd k(d, d);
    auto fp = [&](double x) { return -p * std::pow(x, -p - 1); };
    auto fpp = [&](double x) { return p * (p + 1) * std::pow(x, -p - 2); };
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) {
            const double x = lam(a), y = lam(b);
            if (p == 0) k(a, b) = 1.0 / (x * y);
            else if (std::abs(x - y) <= 1e-8 * std::max(x, y)) k(a, b) = fpp(0.5 * (x + y));
            else k(a, b) = (fp(x) - fp(y)) / (x - y);
        }
    return k;
}

SymMatrix effective_matrix(const CriterionSpec& spec, const SymMatrix& m, double& scale) {
    scale = 1.0;
    if (!spec.two_stage) return m;
    const double alpha = spec.two_stage->alpha;
    scale = (1.0 - alpha) * (1.0 - alpha);
    SymMatrix e = m * (1.0 - alpha);
    e.add_scaled(spec.two_stage->m0, alpha);
    return e;
}

// Hessian of the criterion on the span of the given atoms, for the families with a closed form.
std::optional<Eigen::MatrixXd> atom_hessian(const CriterionSpec& spec, const SymMatrix& m,
                                            const std::vector<const SymMatrix*>& atoms) {
    const auto n = static_cast<Eigen::Index>(atoms.size());
    double scale = 1.0;
    const SymMatrix meff = effective_matrix(spec, m, scale);
    if (spec.family == Family::Sum) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t t = 0; t < spec.terms.size(); ++t) {
            const auto ht = atom_hessian(spec.terms[t], meff, atoms);
            if (!ht) return std::nullopt;
            h += spec.term_weights[t] * *ht;
        }
        return scale * h;
    }
    const bool d_like = spec.family == Family::D || (spec.family == Family::TildeP && spec.p == 0);
    if (!d_like && spec.family != Family::TildeP && !(spec.family == Family::P && spec.p > 0)) return std::nullopt;
    const double p = d_like ? 0.0 : spec.p;
    const Spectrum sp = eig_sym(meff);
    const Eigen::VectorXd& lam = sp.eigenvalues;
    if (!(lam.minCoeff() > 0)) return std::nullopt;
    const Eigen::MatrixXd kernel = spectral_kernel(p, lam);
    std::vector<Eigen::MatrixXd> rot;
    for (const auto* a : atoms) rot.push_back(sp.eigenvectors.transpose() * a->mat() * sp.eigenvectors);
    Eigen::MatrixXd h(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            h(i, j) = h(j, i) =
                (kernel.array() * rot[static_cast<std::size_t>(i)].array() * rot[static_cast<std::size_t>(j)].array())
                    .sum();
    if (spec.family == Family::P) {
        // Psi = T^{1/p} with T = tr M^{-p}.
        const double t = lam.array().pow(-p).sum();
        Eigen::VectorXd gt(n);
        for (Eigen::Index i = 0; i < n; ++i)
            gt(i) = -p * (lam.array().pow(-p - 1) * rot[static_cast<std::size_t>(i)].diagonal().array()).sum();
        h = (1.0 / p) * std::pow(t, 1.0 / p - 1.0) * h +
            (1.0 / p) * (1.0 / p - 1.0) * std::pow(t, 1.0 / p - 2.0) * (gt * gt.transpose());
    }
    return scale * h;
}

// Newton step on the support: minimizes the second-order model over weights summing to one,
// followed by an exact line search along the resulting direction.
bool support_newton_step(const DesignSpace& space, const std::vector<std::size_t>& active, const CriterionSpec& spec,
                         std::vector<double>& w, SymMatrix& m, ExtReal& value) {
    std::vector<std::size_t> sup;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] > 0) sup.push_back(i);
    const auto s = static_cast<Eigen::Index>(sup.size());
    if (s < 2) return false;
    std::vector<const SymMatrix*> atoms;
    for (auto i : sup) atoms.push_back(&space.atom(active[i]));
    const auto h = atom_hessian(spec, m, atoms);
    if (!h) return false;
    SymMatrix g0;
    try {
        g0 = grad(spec, m);
    } catch (const Error&) {
        return false;
    }
    Eigen::VectorXd g(s);
    for (Eigen::Index j = 0; j < s; ++j) g(j) = frob_inner(g0, *atoms[static_cast<std::size_t>(j)]);
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
    kkt.topLeftCorner(s, s) = *h;
    kkt.block(0, s, s, 1).setOnes();
    kkt.block(s, 0, 1, s).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + 1);
    rhs.head(s) = -g;
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    Eigen::VectorXd dw = sol.head(s);
    dw.array() -= dw.mean();
    if (!dw.allFinite() || !(g.dot(dw) < 0)) return false;

    double gmax = 1.0;
    std::optional<Eigen::Index> hit;
    for (Eigen::Index i = 0; i < s; ++i) {
        if (dw(i) < 0) {
            const double r = w[sup[static_cast<std::size_t>(i)]] / -dw(i);
            if (r < gmax) {
                gmax = r;
                hit = i;
            }
        }
    }
    if (!(gmax > 0)) return false;
    SymMatrix d = SymMatrix::zero(space.dim());
    for (Eigen::Index i = 0; i < s; ++i) d.add_scaled(*atoms[static_cast<std::size_t>(i)], dw(i));
    const StepResult step = exact_line_search(spec, m, d, value, gmax);
    if (!(step.gamma > 0)) return false;

    std::vector<double> nw = w;
    for (Eigen::Index i = 0; i < s; ++i) nw[sup[static_cast<std::size_t>(i)]] += step.gamma * dw(i);
    if (hit && step.gamma == gmax) nw[sup[static_cast<std::size_t>(*hit)]] = 0.0;
    double total = 0.0;
    for (auto& x : nw) {
        if (x < 0) x = 0.0;
        total += x;
    }
    for (auto& x : nw) x /= total;
    const SymMatrix nm = assemble(space, active, nw);
    const ExtReal nv = eval(spec, nm);
    if (!is_finite_value(nv) || nv > value + value_slack(value)) return false;
    w = std::move(nw);
    m = nm;
    value = nv;
    return true;
}

// Starting weights with a finite criterion value.
std::vector<double> feasible_start(const DesignSpace& space, const std::vector<std::size_t>& active,
                                   const CriterionSpec& spec, const SolveSettings& settings,
                                   const std::optional<Design>& init) {
    const std::size_t n = active.size();
    auto value_of = [&](const std::vector<double>& w) { return eval(spec, assemble(space, active, w)); };
    if (init) {
        std::vector<double> w(n, 0.0);
        double total = 0.0;
        for (const auto& e : init->entries()) {
            auto it = std::lower_bound(active.begin(), active.end(), e.index);
            if (it != active.end() && *it == e.index) {
                w[static_cast<std::size_t>(it - active.begin())] = e.weight;
                total += e.weight;
            }
        }
        if (total > 0) {
            for (auto& x : w) x /= total;
            if (is_finite_value(value_of(w))) return w;
        }
    }
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    if (is_finite_value(value_of(w))) return w;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> single(n, 0.0);
        single[i] = 1.0;
        if (is_finite_value(value_of(single))) return single;
    }
    // Regularized probe: the two-stage criterion is finite everywhere.
    double scale = 0.0;
    for (auto i : active) scale += space.atom(i).trace();
    scale = std::max(scale / (static_cast<double>(n) * space.dim()), 1e-12);
    CriterionSpec probe = spec;
    probe.two_stage = TwoStage{0.5, SymMatrix::identity(space.dim()) * scale};
    SolveSettings ps = settings;
    ps.max_inner_iters = std::min(settings.max_inner_iters, 2000);
    ps.best_effort = false;
    const SolveResult pr = solve_weights(space, active, probe, ps);
    std::vector<double> pw(n, 0.0);
    for (const auto& e : pr.design.entries())
        pw[static_cast<std::size_t>(std::lower_bound(active.begin(), active.end(), e.index) - active.begin())] =
            e.weight;
    if (is_finite_value(value_of(pw))) return pw;
    throw InfeasibleStart("no design on the candidate set has a finite " + spec.name() + " value");
}

} // namespace

double gap_floor(ExtReal value) { return 1e-10 * (1.0 + std::abs(value)); }

double effective_target(const SolveSettings& settings, ExtReal value) {
    if (settings.best_effort) return settings.delta_bar;
    return std::max(settings.delta_bar, gap_floor(value));
}

Certificate certify(const DesignSpace& space, std::span<const std::size_t> active, const CriterionSpec& spec,
                    const Design& xi, double target) {
    const SymMatrix m = info_matrix(space, xi);
    const SensitivityField field(spec, m);
    double worst = std::numeric_limits<double>::infinity();
    for (auto i : active) worst = std::min(worst, field.at(space.atom(i)));
    Certificate c;
    c.gap = -worst;
    c.target = target;
    c.achieved = c.gap <= target;
    return c;
}

SolveResult solve_weights(const DesignSpace& space, std::span<const std::size_t> active_in,
                          const CriterionSpec& spec, const SolveSettings& settings,
                          const std::optional<Design>& init) {
    if (!(settings.delta_bar >= 0)) throw InvalidInput("delta_bar must be non-negative");
    if (!(settings.w_min >= 0 && settings.w_min < 0.5)) throw InvalidInput("w_min must lie in [0, 0.5)");
    if (settings.max_inner_iters < 0) throw InvalidInput("max_inner_iters must be non-negative");
    spec.validate(space.dim());
    const std::vector<std::size_t> active = normalize_active(space, active_in);
    const std::size_t n = active.size();

    std::vector<double> w = feasible_start(space, active, spec, settings, init);
    SymMatrix m = assemble(space, active, w);
    ExtReal value = eval(spec, m);

    SolveResult res;
    res.values.push_back(value);
    std::vector<double> psi(n);
    double best = value;
    int stall = 0;
    int it = 0;
    res.stop_reason = "iteration limit";
    for (;; ++it) {
        const SensitivityField field(spec, m);
        for (std::size_t i = 0; i < n; ++i) psi[i] = field.at(space.atom(active[i]));
        std::size_t fw = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (psi[i] < psi[fw]) fw = i;
        const double gap = -psi[fw];
        if (gap <= effective_target(settings, value)) {
            res.stop_reason = "target gap reached";
            break;
        }
        if (it >= settings.max_inner_iters) break;

        std::optional<std::size_t> away;
        for (std::size_t i = 0; i < n; ++i)
            if (w[i] > 0 && (!away || psi[i] > psi[*away])) away = i;
        const double away_gap = away ? psi[*away] : 0.0;

        auto try_step = [&](bool toward, std::size_t idx) -> StepResult {
            SymMatrix d = toward ? space.atom(active[idx]) - m : m - space.atom(active[idx]);
            const double full = toward ? 1.0 : w[idx] / (1.0 - w[idx]);
            double gmax = full;
            if (!(gmax > 0) || !std::isfinite(gmax)) return {0.0, value};
            if (!is_finite_value(eval_along(spec, m, d, gmax))) {
                // Stop short of the boundary: keep every supported weight >= w_min.
                double cap;
                if (toward) {
                    double wmin_other = std::numeric_limits<double>::infinity();
                    for (std::size_t j = 0; j < n; ++j)
                        if (j != idx && w[j] > 0) wmin_other = std::min(wmin_other, w[j]);
                    cap = std::isfinite(wmin_other) ? 1.0 - settings.w_min / wmin_other : 1.0;
                } else {
                    cap = (w[idx] - settings.w_min) / (1.0 - w[idx]);
                }
                gmax = std::min(gmax, cap);
                if (!(gmax > 0)) return {0.0, value};
            }
            const double slope0 = -(toward ? gap : away_gap);
            StepResult s = settings.step_rule == StepRule::exact_line_search
                               ? exact_line_search(spec, m, d, value, gmax)
                               : armijo(spec, m, d, value, slope0, gmax, settings.armijo_beta,
                                        settings.armijo_sigma);
            if (s.gamma > 0) {
                if (toward) {
                    for (auto& x : w) x *= (1.0 - s.gamma);
                    w[idx] += s.gamma;
                    if (s.gamma == full) {
                        std::fill(w.begin(), w.end(), 0.0);
                        w[idx] = 1.0;
                    }
                } else {
                    for (auto& x : w) x *= (1.0 + s.gamma);
                    w[idx] -= s.gamma;
                    if (s.gamma == full) w[idx] = 0.0;
                }
            }
            return s;
        };

        if (settings.support_newton && spec.smooth() && (it + 1) % kNewtonPeriod == 0 &&
            support_newton_step(space, active, spec, w, m, value)) {
            res.values.push_back(value);
            if (value < best) {
                best = value;
                stall = 0;
            }
            continue;
        }

        const bool use_away = settings.away_steps && away && *away != fw && away_gap > gap && w[*away] < 1.0;
        const std::vector<double> w_before = w;
        StepResult step = use_away ? try_step(false, *away) : try_step(true, fw);
        if (step.gamma == 0 && use_away) step = try_step(true, fw);
        if (step.gamma == 0 && !use_away && settings.away_steps && away && *away != fw && w[*away] < 1.0)
            step = try_step(false, *away);
        if (step.gamma == 0) {
            if (settings.support_newton && spec.smooth() && support_newton_step(space, active, spec, w, m, value)) {
                res.values.push_back(value);
                if (value < best) {
                    best = value;
                    stall = 0;
                }
                continue;
            }
            res.stop_reason = "stalled";
            break;
        }
        double total = 0.0;
        for (auto& x : w) {
            if (x < 0) x = 0.0;
            total += x;
        }
        for (auto& x : w) x /= total;
        const SymMatrix m_new = assemble(space, active, w);
        const ExtReal v_new = eval(spec, m_new);
        if (!is_finite_value(v_new) || v_new > value + value_slack(value)) {
            w = w_before;
            if (settings.support_newton && spec.smooth() && support_newton_step(space, active, spec, w, m, value)) {
                res.values.push_back(value);
                if (value < best) {
                    best = value;
                    stall = 0;
                }
                continue;
            }
            res.stop_reason = "stalled";
            break;
        }
        m = m_new;
        value = v_new;
        res.values.push_back(value);
        if (value < best) {
            best = value;
            stall = 0;
        } else if (++stall >= kStallLimit) {
            res.stop_reason = "stalled";
            ++it;
            break;
        }
    }
    res.iterations = it;
    res.design = to_design(active, w);
    res.value = eval(spec, info_matrix(space, res.design));
    res.certificate = certify(space, active, spec, res.design, effective_target(settings, res.value));
    return res;
}

VertexDirectionResult vertex_direction(const DesignSpace& space, const CriterionSpec& spec, double eps,
                                       int max_iters, const Design& init, VertexStep step) {
    if (!(eps >= 0)) throw InvalidInput("eps must be non-negative");
    if (max_iters < 0) throw InvalidInput("max_iters must be non-negative");
    spec.validate(space.dim());
    init.check_valid(space);
    const auto t0 = std::chrono::steady_clock::now();
    VertexDirectionResult out;
    out.trace.algorithm = "vertex_direction";
    out.trace.criterion = spec.name();
    out.trace.eps = eps;
    Design xi = init;
    for (int k = 0;; ++k) {
        const SymMatrix m = info_matrix(space, xi);
        const ExtReal value = eval(spec, m);
        if (!is_finite_value(value))
            throw InfeasibleStart("vertex-direction start has an infinite criterion value");
        const SensitivityField field(spec, m);
        std::size_t worst = 0;
        double worst_psi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < space.size(); ++i) {
            const double p = field.at(space.atom(i));
            if (p < worst_psi) {
                worst_psi = p;
                worst = i;
            }
        }
        IterationRecord r;
        r.k = k;
        r.psi = value;
        r.gap = -worst_psi;
        r.violator = static_cast<long>(worst);
        r.violator_psi = worst_psi;
        r.n_active = space.size();
        r.n_support = xi.size();
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.trace.add(r);
        if (worst_psi >= -eps) {
            out.trace.set_status(RunStatus::terminated_eps_optimal);
            break;
        }
        if (k >= max_iters) {
            out.trace.set_status(RunStatus::iteration_cap);
            break;
        }
        double alpha = 1.0 / (k + 2.0);
        if (step == VertexStep::line_search) {
            const SymMatrix d = space.atom(worst) - m;
            const StepResult s = exact_line_search(spec, m, d, value, 1.0);
            if (s.gamma > 0) alpha = s.gamma;
        }
        xi = mix(xi, Design::point_mass(worst), alpha);
    }
    out.trace.final_min_sensitivity = out.trace.records.back().violator_psi;
    out.design = xi;
    return out;
}

} // namespace oed
