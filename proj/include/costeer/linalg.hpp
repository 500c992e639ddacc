#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <stdexcept>
#include <string>

// Dense small-matrix helpers shared by the solvers and the learner:
// Kronecker products, the vecv/vecs quadratic-form operators, stable
// least squares and Hurwitz tests. Everything is double precision and
// sized for the 4-state lateral model, but written generically.

namespace costeer {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct RankDeficientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotHurwitzError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
// Guard against runaway Kronecker dimensions.
inline constexpr Eigen::Index kMaxKronDim = 1 << 14;
}  // namespace detail

inline Matrix kron(const Matrix& a, const Matrix& b) {
    if (a.size() == 0 || b.size() == 0)
        throw DimensionError("kron: empty operand");
    if (a.rows() * b.rows() > detail::kMaxKronDim ||
        a.cols() * b.cols() > detail::kMaxKronDim)
        throw DimensionError("kron: product dimensions exceed cap");
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Column-stacking vec operator.
inline Vector vec(const Matrix& m) {
    Vector out(m.size());
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            out(k++) = m(i, j);
    return out;
}

// vecv(v) = [v1^2, v1 v2, ..., v1 vn, v2^2, ..., vn^2]^T.
inline Vector vecv(const Vector& v) {
    const Eigen::Index n = v.size();
    if (n < 1)
        throw DimensionError("vecv: empty vector");
    Vector out(n * (n + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            out(k++) = v(i) * v(j);
    return out;
}

// vecs(P) = [p11, 2 p12, ..., 2 p1m, p22, 2 p23, ..., pmm]^T for symmetric P.
// Dual to vecv: vecv(x)^T vecs(P) = x^T P x.
inline Vector vecs(const Matrix& p, double sym_tol = 1e-10) {
    const Eigen::Index m = p.rows();
    if (m != p.cols())
        throw DimensionError("vecs: matrix not square");
    if ((p - p.transpose()).cwiseAbs().maxCoeff() > sym_tol)
        throw DimensionError("vecs: matrix not symmetric within tolerance");
    Vector out(m * (m + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j)
            out(k++) = (i == j) ? p(i, j) : 2.0 * p(i, j);
    return out;
}

inline Matrix unvecs(const Vector& s) {
    // m(m+1)/2 = len  =>  m = (-1 + sqrt(1+8 len)) / 2
    const auto len = static_cast<double>(s.size());
    const auto m = static_cast<Eigen::Index>(std::round((-1.0 + std::sqrt(1.0 + 8.0 * len)) / 2.0));
    if (m * (m + 1) / 2 != s.size())
        throw DimensionError("unvecs: length is not triangular");
    Matrix p = Matrix::Zero(m, m);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) {
            p(i, j) = (i == j) ? s(k) : 0.5 * s(k);
            p(j, i) = p(i, j);
            ++k;
        }
    return p;
}

// Minimizer of ||theta z - xi|| via SVD; throws RankDeficientError when the
// numerical rank (singular values below rank_tol x largest) is short.
inline Vector solve_least_squares(const Matrix& theta, const Vector& xi,
                                  double rank_tol = 1e-8) {
    if (theta.rows() < theta.cols())
        throw DimensionError("solve_least_squares: underdetermined system");
    Eigen::JacobiSVD<Matrix> svd(theta, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(sv.size() - 1) < rank_tol * sv(0))
        throw RankDeficientError("solve_least_squares: numerical rank below column count");
    return svd.solve(xi);
}

inline Eigen::Index numerical_rank(const Matrix& m, double rank_tol = 1e-8) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0)
        return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) >= rank_tol * sv(0))
            ++r;
    return r;
}

inline double spectral_norm(const Matrix& m) {
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

// All eigenvalue real parts < -margin.
inline bool is_hurwitz(const Matrix& m, double margin = 1e-10) {
    if (m.rows() != m.cols())
        throw DimensionError("is_hurwitz: matrix not square");
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    return (es.eigenvalues().real().array() < -margin).all();
}

inline double spectral_abscissa(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().real().maxCoeff();
}

}  // namespace costeer
