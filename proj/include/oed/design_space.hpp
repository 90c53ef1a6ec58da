#pragma once

#include "oed/matcone.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oed {

// Finite candidate set: points with their one-point information matrices.
class DesignSpace {
public:
    DesignSpace(std::vector<Eigen::VectorXd> points, std::vector<SymMatrix> atoms,
                std::vector<std::string> labels = {});

    std::size_t size() const noexcept { return atoms_.size(); }
    // Dimension of the information matrices.
    int dim() const noexcept { return atoms_.front().dim(); }
    // Dimension of the input points.
    int point_dim() const noexcept { return static_cast<int>(points_.front().size()); }

    const Eigen::VectorXd& point(std::size_t i) const { return points_.at(i); }
    const SymMatrix& atom(std::size_t i) const { return atoms_.at(i); }
    const std::vector<Eigen::VectorXd>& points() const noexcept { return points_; }
    const std::vector<SymMatrix>& atoms() const noexcept { return atoms_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    // Index of the point within max-norm distance tol of x, if any.
    std::optional<std::size_t> find(const Eigen::VectorXd& x, double tol = 0.0) const;

private:
    std::vector<Eigen::VectorXd> points_;
    std::vector<SymMatrix> atoms_;
    std::vector<std::string> labels_;
};

// Probability vector on finitely many indices of a DesignSpace. Entries are
// kept sorted by index with strictly positive weights summing to one.
class Design {
public:
    struct Entry {
        std::size_t index;
        double weight;
    };

    Design() = default;
    explicit Design(std::vector<Entry> entries);

    static Design point_mass(std::size_t index);
    static Design uniform(std::span<const std::size_t> indices);

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::vector<std::size_t> support() const;
    double weight_of(std::size_t index) const;

    // Throws InvalidInput when an index is outside the space.
    void check_valid(const DesignSpace& space) const;

private:
    std::vector<Entry> entries_;
};

SymMatrix info_matrix(const DesignSpace& space, const Design& xi);

// Support size bound d(d+1)/2 + 1.
std::size_t caratheodory_bound(int d);

// Equivalent design with at most d(d+1)/2 + 1 support points.
Design caratheodory_reduce(const DesignSpace& space, const Design& xi);

// (1 - alpha) xi + alpha eta.
Design mix(const Design& xi, const Design& eta, double alpha);

// Drops weights below w_min and renormalizes.
Design prune(const Design& xi, double w_min);

} // namespace oed
