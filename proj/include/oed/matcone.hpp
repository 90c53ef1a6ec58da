#pragma once

#include <Eigen/Dense>

namespace oed {

// Dense symmetric matrix. Construction symmetrizes the input.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(int dim);
    explicit SymMatrix(const Eigen::MatrixXd& m);

    static SymMatrix zero(int dim);
    static SymMatrix identity(int dim);
    static SymMatrix diagonal(const Eigen::VectorXd& d);
    // v vᵀ
    static SymMatrix outer(const Eigen::VectorXd& v);

    int dim() const noexcept { return static_cast<int>(m_.rows()); }
    double operator()(int i, int j) const { return m_(i, j); }
    const Eigen::MatrixXd& mat() const noexcept { return m_; }

    SymMatrix operator+(const SymMatrix& o) const;
    SymMatrix operator-(const SymMatrix& o) const;
    SymMatrix operator*(double s) const;
    SymMatrix& operator+=(const SymMatrix& o);
    SymMatrix& operator*=(double s);
    // this += s * o
    void add_scaled(const SymMatrix& o, double s);

    double trace() const { return m_.trace(); }

private:
    Eigen::MatrixXd m_;
};

inline SymMatrix operator*(double s, const SymMatrix& m) { return m * s; }

struct Spectrum {
    Eigen::VectorXd eigenvalues;  // ascending
    Eigen::MatrixXd eigenvectors; // columns, orthonormal
};

Spectrum eig_sym(const SymMatrix& m);

// Relative definiteness cutoff 1e-10 * max(1, lambda_max).
double default_pd_tol(const Spectrum& s);
double default_pd_tol(const SymMatrix& m);

bool is_pd(const SymMatrix& m, double tol);

// M^{-p} for p > 0; throws DomainError when M is not positive definite.
SymMatrix mat_pow_neg(const SymMatrix& m, double p);
SymMatrix mat_pow_neg(const Spectrum& s, double p);

// Moore-Penrose inverse; eigenvalues <= rank_tol * lambda_max count as zero.
SymMatrix pinv(const SymMatrix& m, double rank_tol = 1e-10);

bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol);

// Frobenius inner product.
double frob_inner(const SymMatrix& a, const SymMatrix& b);
double frob_norm(const SymMatrix& m);
// Largest singular value.
double op_norm(const SymMatrix& m);

// Vectorization isometric for the Frobenius norm (off-diagonals scaled by sqrt 2).
Eigen::VectorXd svec(const SymMatrix& m);

} // namespace oed
