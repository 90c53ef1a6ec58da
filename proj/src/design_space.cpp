#include "oed/design_space.hpp"

#include "oed/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace oed {

DesignSpace::DesignSpace(std::vector<Eigen::VectorXd> points, std::vector<SymMatrix> atoms,
                         std::vector<std::string> labels)
    : points_(std::move(points)), atoms_(std::move(atoms)), labels_(std::move(labels)) {
    if (atoms_.empty()) throw InvalidInput("design space must contain at least one point");
    if (points_.size() != atoms_.size()) throw InvalidInput("design space needs one atom per point");
    if (!labels_.empty() && labels_.size() != points_.size())
        throw InvalidInput("design space labels must match the points");
    const int d = atoms_.front().dim();
    const auto dx = points_.front().size();
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (atoms_[i].dim() != d) throw InvalidInput("design space atoms differ in dimension");
        if (points_[i].size() != dx) throw InvalidInput("design space points differ in dimension");
        const Spectrum s = eig_sym(atoms_[i]);
        const double lmax = s.eigenvalues.cwiseAbs().maxCoeff();
        if (s.eigenvalues(0) < -1e-10 * lmax) {
            std::ostringstream os;
            os << "atom " << i << " is not positive semidefinite (lambda_min = " << s.eigenvalues(0) << ")";
            throw InvalidInput(os.str());
        }
    }
    std::vector<std::size_t> order(points_.size());
    std::iota(order.begin(), order.end(), 0);
    auto less = [this](std::size_t a, std::size_t b) {
        const auto& pa = points_[a];
        const auto& pb = points_[b];
        return std::lexicographical_compare(pa.data(), pa.data() + pa.size(), pb.data(),
                                            pb.data() + pb.size());
    };
    std::sort(order.begin(), order.end(), less);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (points_[order[i - 1]] == points_[order[i]]) {
            std::ostringstream os;
            os << "design space points " << order[i - 1] << " and " << order[i] << " coincide";
            throw InvalidInput(os.str());
        }
    }
}

std::optional<std::size_t> DesignSpace::find(const Eigen::VectorXd& x, double tol) const {
    if (x.size() != points_.front().size()) return std::nullopt;
    for (std::size_t i = 0; i < points_.size(); ++i)
        if ((points_[i] - x).cwiseAbs().maxCoeff() <= tol) return i;
    return std::nullopt;
}

Design::Design(std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.index < b.index; });
    double total = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!(entries[i].weight > 0) || !std::isfinite(entries[i].weight))
            throw InvalidInput("design weights must be positive and finite");
        if (i > 0 && entries[i].index == entries[i - 1].index)
            throw InvalidInput("design indices must be unique");
        total += entries[i].weight;
    }
    for (auto& e : entries) e.weight /= total;
    entries_ = std::move(entries);
}

Design Design::point_mass(std::size_t index) { return Design({{index, 1.0}}); }

Design Design::uniform(std::span<const std::size_t> indices) {
    std::vector<Entry> e;
    e.reserve(indices.size());
    for (auto i : indices) e.push_back({i, 1.0});
    return Design(std::move(e));
}

std::vector<std::size_t> Design::support() const {
    std::vector<std::size_t> s;
    s.reserve(entries_.size());
    for (const auto& e : entries_) s.push_back(e.index);
    return s;
}

double Design::weight_of(std::size_t index) const {
    for (const auto& e : entries_)
        if (e.index == index) return e.weight;
    return 0.0;
}

void Design::check_valid(const DesignSpace& space) const {
    if (entries_.empty()) throw InvalidInput("design is empty");
    for (const auto& e : entries_)
        if (e.index >= space.size()) throw InvalidInput("design index outside the design space");
}

SymMatrix info_matrix(const DesignSpace& space, const Design& xi) {
    xi.check_valid(space);
    SymMatrix m = SymMatrix::zero(space.dim());
    for (const auto& e : xi.entries()) m.add_scaled(space.atom(e.index), e.weight);
    return m;
}

std::size_t caratheodory_bound(int d) { return static_cast<std::size_t>(d) * (d + 1) / 2 + 1; }

Design caratheodory_reduce(const DesignSpace& space, const Design& xi) {
    xi.check_valid(space);
    const std::size_t bound = caratheodory_bound(space.dim());
    if (xi.size() <= bound) return xi;

    std::vector<std::size_t> idx = xi.support();
    std::vector<double> w;
    for (const auto& e : xi.entries()) w.push_back(e.weight);
    std::vector<Eigen::VectorXd> vecs;
    for (auto i : idx) vecs.push_back(svec(space.atom(i)));
    const auto rows = vecs.front().size() + 1;
    const auto block = static_cast<std::size_t>(rows) + 1;

    while (idx.size() > bound) {
        // Null vector of the moment map restricted to the first `block` entries.
        Eigen::MatrixXd a(rows, block);
        for (std::size_t j = 0; j < block; ++j) {
            a.col(static_cast<Eigen::Index>(j)).head(rows - 1) = vecs[j];
            a(rows - 1, static_cast<Eigen::Index>(j)) = 1.0;
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
        Eigen::VectorXd v = svd.matrixV().col(static_cast<Eigen::Index>(block) - 1);
        if (v.maxCoeff() <= 0) v = -v;
        std::size_t drop = 0;
        double step = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < block; ++j) {
            const double vj = v(static_cast<Eigen::Index>(j));
            if (vj > 0) {
                const double t = w[j] / vj;
                if (t < step) {
                    step = t;
                    drop = j;
                }
            }
        }
        for (std::size_t j = 0; j < block; ++j) w[j] -= step * v(static_cast<Eigen::Index>(j));
        w[drop] = 0.0;
        for (std::size_t j = idx.size(); j-- > 0;) {
            if (w[j] <= 0) {
                idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(j));
                w.erase(w.begin() + static_cast<std::ptrdiff_t>(j));
                vecs.erase(vecs.begin() + static_cast<std::ptrdiff_t>(j));
            }
        }
    }
    std::vector<Design::Entry> out;
    for (std::size_t j = 0; j < idx.size(); ++j) out.push_back({idx[j], w[j]});
    return Design(std::move(out));
}

Design mix(const Design& xi, const Design& eta, double alpha) {
    if (!(alpha >= 0 && alpha <= 1)) throw InvalidInput("mixing weight must lie in [0, 1]");
    std::map<std::size_t, double> merged;
    if (alpha < 1)
        for (const auto& e : xi.entries()) merged[e.index] += (1.0 - alpha) * e.weight;
    if (alpha > 0)
        for (const auto& e : eta.entries()) merged[e.index] += alpha * e.weight;
    std::vector<Design::Entry> out;
    for (const auto& [i, wt] : merged)
        if (wt > 0) out.push_back({i, wt});
    return Design(std::move(out));
}

Design prune(const Design& xi, double w_min) {
    if (!(w_min >= 0 && w_min < 0.5)) throw InvalidInput("w_min must lie in [0, 0.5)");
    std::vector<Design::Entry> out;
    for (const auto& e : xi.entries())
        if (e.weight >= w_min) out.push_back(e);
    if (out.empty()) throw InvalidInput("all design weights fall below w_min");
    if (out.size() == xi.size()) return xi;
    return Design(std::move(out));
}

} // namespace oed
