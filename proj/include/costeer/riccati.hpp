#pragma once

#include "costeer/linalg.hpp"

#include <vector>

// Model-based oracle: Lyapunov solver by vectorization, Bass pole-shifting
// stabilization, Kleinman policy iteration and the ARE front door.

namespace costeer {

struct NoStabilizingSolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Solves M W + W M^T = rhs by vectorization. Requires lambda_i(M) + lambda_j(M) != 0,
// which the callers guarantee (Hurwitz or uniformly shifted spectra).
inline Matrix solve_sylvester_sym(const Matrix& m, const Matrix& rhs) {
    const Eigen::Index n = m.rows();
    Matrix lhs = kron(Matrix::Identity(n, n), m) + kron(m, Matrix::Identity(n, n));
    Eigen::FullPivLU<Matrix> lu(lhs);
    if (!lu.isInvertible())
        throw NoStabilizingSolutionError("solve_sylvester_sym: singular vectorized operator");
    Vector w = lu.solve(vec(rhs));
    Matrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        out.col(j) = w.segment(j * n, n);
    return 0.5 * (out + out.transpose());
}

// Unique symmetric P with a_cl^T P + P a_cl + q_eff = 0, a_cl Hurwitz.
inline Matrix solve_lyapunov(const Matrix& a_cl, const Matrix& q_eff) {
    if (!is_hurwitz(a_cl))
        throw NotHurwitzError("solve_lyapunov: closed-loop matrix is not Hurwitz");
    return solve_sylvester_sym(a_cl.transpose(), -q_eff);
}

// Bass method: with beta shifting the spectrum into the right half plane,
// (A + beta I) W + W (A + beta I)^T = 2 B B^T has W > 0 for controllable (A,B)
// and K = B^T W^{-1} renders A - B K Hurwitz.
inline Matrix stabilizing_gain(const Matrix& a, const Matrix& b) {
    const Eigen::Index n = a.rows();
    const double beta = 2.0 * std::max(1.0, a.cwiseAbs().rowwise().sum().maxCoeff());
    Matrix shifted = a + beta * Matrix::Identity(n, n);
    Matrix w = solve_sylvester_sym(shifted, 2.0 * b * b.transpose());
    Eigen::FullPivLU<Matrix> lu(w);
    if (!lu.isInvertible())
        throw NoStabilizingSolutionError("stabilizing_gain: Gramian singular, (A,B) not controllable");
    Matrix k = b.transpose() * lu.inverse();
    if (!is_hurwitz(a - b * k))
        throw NoStabilizingSolutionError("stabilizing_gain: Bass gain failed to stabilize");
    return k;
}

struct KleinmanIterate {
    Matrix p;       // value matrix P_j
    Matrix k_next;  // improved gain K_{j+1} = R^{-1} B^T P_j
};

struct KleinmanResult {
    std::vector<KleinmanIterate> iterates;
    Matrix p;
    Matrix k;
    bool converged = false;
};

// Policy iteration from a stabilizing K_0: P_j solves the closed-loop
// Lyapunov equation with Q + K_j^T R K_j, then K_{j+1} = R^{-1} B^T P_j.
// Monotone and quadratically convergent to the ARE solution.
inline KleinmanResult kleinman_iterate(const Matrix& a, const Matrix& b,
                                       const Matrix& q, const Matrix& r,
                                       const Matrix& k0, double err = 1e-6,
                                       int max_iters = 60) {
    if (!is_hurwitz(a - b * k0))
        throw NotHurwitzError("kleinman_iterate: K0 is not stabilizing");
    Eigen::LLT<Matrix> r_chol(r);
    KleinmanResult res;
    Matrix k = k0;
    Matrix p_prev;
    for (int j = 0; j < max_iters; ++j) {
        Matrix p = solve_lyapunov(a - b * k, q + k.transpose() * r * k);
        Matrix k_next = r_chol.solve(b.transpose() * p);
        res.iterates.push_back({p, k_next});
        if (j > 0 && (p - p_prev).norm() < err) {
            res.p = p;
            res.k = k_next;
            res.converged = true;
            return res;
        }
        p_prev = p;
        k = k_next;
    }
    res.p = res.iterates.back().p;
    res.k = res.iterates.back().k_next;
    return res;
}

struct AreSolution {
    Matrix p;
    Matrix k;
    double residual = 0.0;
};

// Stabilizing ARE solution via Kleinman iteration seeded by Bass pole-shifting.
inline AreSolution solve_are(const Matrix& a, const Matrix& b, const Matrix& q,
                             const Matrix& r, double residual_tol = 1e-8,
                             int max_iters = 60) {
    Matrix k0 = stabilizing_gain(a, b);
    KleinmanResult kr = kleinman_iterate(a, b, q, r, k0, 1e-13, max_iters);
    AreSolution sol;
    sol.p = kr.p;
    sol.k = kr.k;
    Matrix res = a.transpose() * sol.p + sol.p * a + q -
                 sol.p * b * Eigen::LLT<Matrix>(r).solve(b.transpose() * sol.p);
    sol.residual = res.norm();
    if (!kr.converged || sol.residual > residual_tol || !is_hurwitz(a - b * sol.k))
        throw NoStabilizingSolutionError("solve_are: iteration did not reach a stabilizing solution");
    return sol;
}

}  // namespace costeer
