#include "oed/matcone.hpp"

#include "oed/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace oed {

SymMatrix::SymMatrix(int dim) : m_(Eigen::MatrixXd::Zero(dim, dim)) {
    if (dim < 1) throw InvalidInput("matrix dimension must be at least 1");
}

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw InvalidInput("symmetric matrix must be square and non-empty");
    m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::zero(int dim) { return SymMatrix(dim); }

SymMatrix SymMatrix::identity(int dim) {
    return SymMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d) {
    return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

SymMatrix SymMatrix::outer(const Eigen::VectorXd& v) {
    return SymMatrix(Eigen::MatrixXd(v * v.transpose()));
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
    SymMatrix r = *this;
    r.m_ += o.m_;
    return r;
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
    SymMatrix r = *this;
    r.m_ -= o.m_;
    return r;
}

SymMatrix SymMatrix::operator*(double s) const {
    SymMatrix r = *this;
    r.m_ *= s;
    return r;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
    m_ += o.m_;
    return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
    m_ *= s;
    return *this;
}

void SymMatrix::add_scaled(const SymMatrix& o, double s) { m_.noalias() += s * o.m_; }

Spectrum eig_sym(const SymMatrix& m) {
    if (!m.mat().allFinite()) throw NumericFailure("eigendecomposition of a non-finite matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
    if (es.info() != Eigen::Success) throw NumericFailure("symmetric eigensolver did not converge");
    return Spectrum{es.eigenvalues(), es.eigenvectors()};
}

double default_pd_tol(const Spectrum& s) {
    return 1e-10 * std::max(1.0, s.eigenvalues(s.eigenvalues.size() - 1));
}

double default_pd_tol(const SymMatrix& m) { return default_pd_tol(eig_sym(m)); }

bool is_pd(const SymMatrix& m, double tol) {
    if (tol < 0) throw InvalidInput("definiteness tolerance must be non-negative");
    return eig_sym(m).eigenvalues(0) > tol;
}

SymMatrix mat_pow_neg(const Spectrum& s, double p) {
    if (!(p > 0)) throw InvalidInput("negative power requires p > 0");
    const double lmin = s.eigenvalues(0);
    if (!(lmin > default_pd_tol(s)))
        throw DomainError("negative matrix power of a non positive definite matrix, lambda_min = " +
                              std::to_string(lmin),
                          lmin);
    Eigen::VectorXd d = s.eigenvalues.array().pow(-p);
    return SymMatrix(Eigen::MatrixXd(s.eigenvectors * d.asDiagonal() * s.eigenvectors.transpose()));
}

SymMatrix mat_pow_neg(const SymMatrix& m, double p) { return mat_pow_neg(eig_sym(m), p); }

SymMatrix pinv(const SymMatrix& m, double rank_tol) {
    const Spectrum s = eig_sym(m);
    const double lmax = s.eigenvalues.cwiseAbs().maxCoeff();
    const double cut = rank_tol * lmax;
    Eigen::VectorXd d(s.eigenvalues.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double l = s.eigenvalues(i);
        d(i) = (l > cut && l > 0) ? 1.0 / l : 0.0;
    }
    return SymMatrix(Eigen::MatrixXd(s.eigenvectors * d.asDiagonal() * s.eigenvectors.transpose()));
}

bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
    if (a.dim() != b.dim()) throw InvalidInput("Loewner comparison of matrices of different size");
    return eig_sym(b - a).eigenvalues(0) >= -tol;
}

double frob_inner(const SymMatrix& a, const SymMatrix& b) {
    return a.mat().cwiseProduct(b.mat()).sum();
}

double frob_norm(const SymMatrix& m) { return m.mat().norm(); }

double op_norm(const SymMatrix& m) { return eig_sym(m).eigenvalues.cwiseAbs().maxCoeff(); }

Eigen::VectorXd svec(const SymMatrix& m) {
    const int d = m.dim();
    Eigen::VectorXd v(d * (d + 1) / 2);
    int k = 0;
    for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i) v(k++) = (i == j) ? m(i, j) : std::sqrt(2.0) * m(i, j);
    return v;
}

} // namespace oed
