#pragma once

#include "costeer/cnf.hpp"
#include "costeer/linalg.hpp"
#include "costeer/plant.hpp"
#include "costeer/riccati.hpp"

#include <array>
#include <cmath>
#include <random>
#include <vector>

// Model-free policy iteration from trajectory data. A single excitation run
// u = -K0 x + xi is recorded as Kronecker-integral data matrices; each
// iteration solves the least-squares system
//   [delta, -2 Gxx (I4 (x) r Kj^T) - 2 r Gxu, -2 Gxr] z = -Gxx vec(Q + r Kj^T Kj)
// for z = [vecs(Pj); vec(K_{j+1}); vec((D + A Y^l)^T Pj)]. The recovered
// per-basis vectors then yield D, A Y^l, B and the feedforward pair (U, X).

namespace costeer {

struct DivergedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IllConditionedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularPError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Y1 = 0 plus an orthonormal basis of the null space of C = [0, 0, -l_s, 1].
struct BasisSet {
    std::array<Eigen::Vector4d, 4> y;  // y[0] = Y1 = 0
};

inline BasisSet make_basis(double l_s) {
    BasisSet b;
    b.y[0].setZero();
    b.y[1] << 1.0, 0.0, 0.0, 0.0;
    b.y[2] << 0.0, 1.0, 0.0, 0.0;
    const double n = std::sqrt(1.0 + l_s * l_s);
    b.y[3] << 0.0, 0.0, 1.0 / n, l_s / n;
    return b;
}

// Deterministic multi-sine exploration noise with seeded phases.
class ExplorationNoise {
  public:
    ExplorationNoise(double amplitude = 0.01, int n_freq = 8, double freq_min = 0.5,
                     double freq_max = 20.0, unsigned seed = 1)
        : amplitude_(amplitude) {
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
        freqs_.resize(n_freq);
        phases_.resize(n_freq);
        for (int i = 0; i < n_freq; ++i) {
            freqs_[i] = n_freq > 1
                            ? freq_min + (freq_max - freq_min) * i / (n_freq - 1.0)
                            : freq_min;
            phases_[i] = phase(rng);
        }
    }

    double operator()(double t) const {
        double s = 0.0;
        for (std::size_t i = 0; i < freqs_.size(); ++i)
            s += std::sin(freqs_[i] * t + phases_[i]);
        return amplitude_ * s;
    }

  private:
    double amplitude_;
    std::vector<double> freqs_;
    std::vector<double> phases_;
};

enum class Quadrature {
    Trapezoid,  // base-step trapezoid on sampled (x, u, rho)
    Simpson,    // composite Simpson on the same base-step samples
    Rk4         // quadrature states integrated alongside the plant (test oracle)
};

struct CollectOptions {
    int samples = 40;          // intervals, >= 18 unknowns
    double dt_sample = 0.1;    // s, rho must be constant within each interval
    double h = 0.005;          // base step, s
    Quadrature quadrature = Quadrature::Simpson;
    int substeps = 4;          // measurement refinement below the base step
    double state_bound = 1e3;  // divergence guard
};

struct DataBatch {
    // Per basis index l = 1..4 (stored 0-based).
    std::array<Matrix, 4> delta;  // s x 10
    std::array<Matrix, 4> gxx;    // s x 16
    std::array<Matrix, 4> gxu;    // s x 4
    std::array<Matrix, 4> gxr;    // s x 4
    // Interval increments and integrals of the raw signals, for the
    // dynamics regression behind the trigger constants.
    Matrix dx;  // s x 4
    Matrix ix;  // s x 4
    Vector iu;  // s
    Vector ir;  // s
    std::vector<double> times;  // sample instants t_0..t_s
};

// Runs the excitation trajectory u = -k0 x + xi over the learning road and
// accumulates the Eq.-style integral data. The road curvature must be
// piecewise constant per sample interval (segment boundaries aligned).
inline DataBatch collect(const PlantMatrices& mm, const RoadProfile& road,
                         const Eigen::RowVector4d& k0, const ExplorationNoise& noise,
                         const PlantParams& plant, const CollectOptions& opts,
                         const BasisSet& basis) {
    const int s = opts.samples;
    DataBatch batch;
    for (int l = 0; l < 4; ++l) {
        batch.delta[l].setZero(s, 10);
        batch.gxx[l].setZero(s, 16);
        batch.gxu[l].setZero(s, 4);
        batch.gxr[l].setZero(s, 4);
    }
    batch.dx.setZero(s, 4);
    batch.ix.setZero(s, 4);
    batch.iu.setZero(s);
    batch.ir.setZero(s);
    batch.times.resize(s + 1);

    const Eigen::Matrix4d a_cl = mm.a - mm.b * k0;
    auto xdot = [&](double t, const Eigen::Vector4d& x, double rho) -> Eigen::Vector4d {
        return a_cl * x + mm.b * noise(t) + mm.d * rho;
    };
    auto control = [&](double t, const Eigen::Vector4d& x) {
        return -(k0 * x)(0) + noise(t);
    };

    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    double t = 0.0;
    batch.times[0] = 0.0;
    const int n_sub = static_cast<int>(std::round(opts.dt_sample / opts.h));
    const int n_fine = n_sub * opts.substeps;
    const double h_step = opts.h / opts.substeps;

    for (int i = 0; i < s; ++i) {
        const double rho = road.curvature_at(plant.v_x * (t + 0.5 * opts.dt_sample));
        const Eigen::Vector4d x_start = x;
        std::array<Eigen::Vector4d, 4> xl0;
        for (int l = 0; l < 4; ++l)
            xl0[l] = x - basis.y[l] * rho;

        // Integrand of all quadrature rows at (t, x).
        auto integrand = [&](double tt, const Eigen::Vector4d& xx, Vector& q) {
            const double u = control(tt, xx);
            Eigen::Index off = 0;
            for (int l = 0; l < 4; ++l) {
                const Eigen::Vector4d xl = xx - basis.y[l] * rho;
                for (int c1 = 0; c1 < 4; ++c1)
                    for (int c2 = 0; c2 < 4; ++c2)
                        q(off + 4 * c1 + c2) = xl(c1) * xl(c2);
                off += 16;
                q.segment(off, 4) = xl * u;
                off += 4;
                q.segment(off, 4) = xl * rho;
                off += 4;
            }
            q.segment(off, 4) = xx;
            q(off + 4) = u;
            q(off + 5) = rho;
        };

        Vector acc = Vector::Zero(4 * 24 + 6);
        if (opts.quadrature != Quadrature::Rk4) {
            // Sample-based Newton-Cotes over the base-step nodes.
            const bool simpson = opts.quadrature == Quadrature::Simpson;
            if (simpson && n_fine % 2 != 0)
                throw std::invalid_argument("collect: Simpson needs an even step count per interval");
            Vector g(acc.size());
            integrand(t, x, g);
            acc = (simpson ? h_step / 3.0 : 0.5 * h_step) * g;
            for (int k = 0; k < n_fine; ++k) {
                Eigen::Vector4d k1 = xdot(t, x, rho);
                Eigen::Vector4d k2 = xdot(t + 0.5 * h_step, x + 0.5 * h_step * k1, rho);
                Eigen::Vector4d k3 = xdot(t + 0.5 * h_step, x + 0.5 * h_step * k2, rho);
                Eigen::Vector4d k4 = xdot(t + h_step, x + h_step * k3, rho);
                x += (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                t += h_step;
                if (x.norm() > opts.state_bound)
                    throw DivergedError("collect: state diverged, K0 likely not stabilizing");
                integrand(t, x, g);
                double w;
                if (!simpson)
                    w = (k == n_fine - 1) ? 0.5 : 1.0;
                else if (k == n_fine - 1)
                    w = 1.0 / 3.0;
                else
                    w = (k % 2 == 0) ? 4.0 / 3.0 : 2.0 / 3.0;
                acc += w * h_step * g;
            }
        } else {
            // Quadrature states ride along the plant in one augmented RK4.
            const Eigen::Index nq = acc.size();
            auto zdot = [&](double tt, const Eigen::Vector4d& xx, Vector& dq) {
                integrand(tt, xx, dq);
            };
            Vector dq1(nq), dq2(nq), dq3(nq), dq4(nq);
            for (int k = 0; k < n_fine; ++k) {
                Eigen::Vector4d k1 = xdot(t, x, rho);
                zdot(t, x, dq1);
                Eigen::Vector4d k2 = xdot(t + 0.5 * h_step, x + 0.5 * h_step * k1, rho);
                zdot(t + 0.5 * h_step, x + 0.5 * h_step * k1, dq2);
                Eigen::Vector4d k3 = xdot(t + 0.5 * h_step, x + 0.5 * h_step * k2, rho);
                zdot(t + 0.5 * h_step, x + 0.5 * h_step * k2, dq3);
                Eigen::Vector4d k4 = xdot(t + h_step, x + h_step * k3, rho);
                zdot(t + h_step, x + h_step * k3, dq4);
                x += (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                acc += (h_step / 6.0) * (dq1 + 2.0 * dq2 + 2.0 * dq3 + dq4);
                t += h_step;
                if (x.norm() > opts.state_bound)
                    throw DivergedError("collect: state diverged, K0 likely not stabilizing");
            }
        }

        Eigen::Index off = 0;
        for (int l = 0; l < 4; ++l) {
            const Eigen::Vector4d xl1 = x - basis.y[l] * rho;
            batch.delta[l].row(i) = (vecv(xl1) - vecv(xl0[l])).transpose();
            batch.gxx[l].row(i) = acc.segment(off, 16).transpose();
            off += 16;
            batch.gxu[l].row(i) = acc.segment(off, 4).transpose();
            off += 4;
            batch.gxr[l].row(i) = acc.segment(off, 4).transpose();
            off += 4;
        }
        batch.ix.row(i) = acc.segment(off, 4).transpose();
        batch.iu(i) = acc(off + 4);
        batch.ir(i) = acc(off + 5);
        batch.dx.row(i) = (x - x_start).transpose();
        batch.times[i + 1] = t;
    }
    return batch;
}

struct PolicyIterationResult {
    Matrix p;              // 4x4, symmetrized
    Eigen::RowVector4d k;  // converged gain
    std::array<Eigen::Vector4d, 4> recovered;  // P (D + A Y^l) per l
    std::vector<double> p_step_norms;          // ||P_j - P_{j-1}||_F history
    std::vector<double> k_norms;               // ||K_j|| history
    std::vector<Eigen::Index> theta_ranks;     // rank(Theta_j) per iteration
    double max_cross_l_mismatch = 0.0;         // at the final iteration
    int iterations = 0;
};

namespace detail {

struct PerBasisSolution {
    Matrix p;
    Eigen::RowVector4d k_next;
    Eigen::Vector4d w;
};

inline PerBasisSolution solve_basis_ls(const Matrix& delta, const Matrix& gxx,
                                       const Matrix& gxu, const Matrix& gxr,
                                       const Eigen::RowVector4d& k_j,
                                       const Matrix& q, double r,
                                       Eigen::Index* rank_out) {
    const Eigen::Index s = delta.rows();
    Matrix theta(s, 18);
    Matrix i4 = Matrix::Identity(4, 4);
    Matrix kt = k_j.transpose();
    theta.block(0, 0, s, 10) = delta;
    theta.block(0, 10, s, 4) = -2.0 * gxx * kron(i4, r * kt) - 2.0 * r * gxu;
    theta.block(0, 14, s, 4) = -2.0 * gxr;
    Matrix qk = q + r * kt * k_j;
    Vector xi = -gxx * vec(qk);
    if (rank_out)
        *rank_out = numerical_rank(theta);
    Vector z = solve_least_squares(theta, xi);
    PerBasisSolution sol;
    sol.p = unvecs(z.head(10));
    sol.k_next = z.segment(10, 4).transpose();
    sol.w = z.tail(4);
    return sol;
}

}  // namespace detail

// Iterates the data-driven policy evaluation until ||P_j - P_{j-1}|| < err.
// All four basis shifts are solved each round; the l = 1 values drive the
// iteration and the cross-l spread is recorded.
inline PolicyIterationResult policy_iteration(const DataBatch& batch,
                                              const Eigen::RowVector4d& k0,
                                              const Matrix& q, double r,
                                              double err = 1e-6, int max_iters = 50) {
    PolicyIterationResult res;
    Eigen::RowVector4d k = k0;
    Matrix p_prev;
    for (int j = 0; j < max_iters; ++j) {
        std::array<detail::PerBasisSolution, 4> sols;
        Eigen::Index rank = 0;
        for (int l = 0; l < 4; ++l)
            sols[l] = detail::solve_basis_ls(batch.delta[l], batch.gxx[l],
                                             batch.gxu[l], batch.gxr[l], k, q, r,
                                             l == 0 ? &rank : nullptr);
        res.theta_ranks.push_back(rank);

        Matrix p = 0.5 * (sols[0].p + sols[0].p.transpose());
        double mismatch = 0.0;
        for (int l = 1; l < 4; ++l) {
            mismatch = std::max(mismatch, (sols[l].p - sols[0].p).norm() /
                                              std::max(1.0, sols[0].p.norm()));
            mismatch = std::max(mismatch, (sols[l].k_next - sols[0].k_next).norm() /
                                              std::max(1.0, sols[0].k_next.norm()));
        }
        res.max_cross_l_mismatch = mismatch;

        k = sols[0].k_next;
        res.k_norms.push_back(k.norm());
        res.iterations = j + 1;
        const double step_norm = (j == 0) ? std::numeric_limits<double>::infinity()
                                          : (p - p_prev).norm();
        res.p_step_norms.push_back(step_norm);
        if (j > 0 && step_norm < err) {
            res.p = p;
            res.k = k;
            for (int l = 0; l < 4; ++l)
                res.recovered[l] = sols[l].w;
            return res;
        }
        p_prev = p;
    }
    throw NoConvergenceError("policy_iteration: no convergence within iteration cap");
}

struct RecoveredModel {
    Eigen::Vector4d d_est;
    std::array<Eigen::Vector4d, 4> ay_est;  // ay_est[0] = 0
    Eigen::Vector4d b_est;
};

// D = P^{-1} w^1, A Y^l = P^{-1} w^l - D, B = r P^{-1} K^T.
inline RecoveredModel recover_model(const PolicyIterationResult& pi, double r) {
    Eigen::FullPivLU<Matrix> lu(pi.p);
    if (!lu.isInvertible())
        throw SingularPError("recover_model: learned P is singular");
    RecoveredModel m;
    m.d_est = lu.solve(pi.recovered[0]);
    m.ay_est[0].setZero();
    for (int l = 1; l < 4; ++l)
        m.ay_est[l] = lu.solve(pi.recovered[l]) - m.d_est;
    m.b_est = r * lu.solve(pi.k.transpose());
    return m;
}

struct Feedforward {
    double u = 0.0;
    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    double l = 0.0;
};

// Solves [A Y^2, A Y^3, A Y^4, B] [alpha2, alpha3, alpha4, U]^T = -D,
// then X = sum alpha^l Y^l and L = U + K X.
inline Feedforward solve_feedforward(const RecoveredModel& m, const BasisSet& basis,
                                     const Eigen::RowVector4d& k) {
    Matrix sys(4, 4);
    sys.col(0) = m.ay_est[1];
    sys.col(1) = m.ay_est[2];
    sys.col(2) = m.ay_est[3];
    sys.col(3) = m.b_est;
    Eigen::JacobiSVD<Matrix> svd(sys, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(0) / sv(3) > 1e10)
        throw IllConditionedError("solve_feedforward: system condition number exceeds 1e10");
    Vector sol = svd.solve(-m.d_est);
    Feedforward ff;
    ff.u = sol(3);
    ff.x = sol(0) * basis.y[1] + sol(1) * basis.y[2] + sol(2) * basis.y[3];
    ff.l = ff.u + (k * ff.x)(0);
    return ff;
}

// Least-squares fit of [A B D] from the interval increments
// x(t_{i+1}) - x(t_i) = A int x + B int u + D int rho.
inline Matrix regress_dynamics(const DataBatch& batch) {
    const Eigen::Index s = batch.ix.rows();
    Matrix lhs(s, 6);
    lhs.block(0, 0, s, 4) = batch.ix;
    lhs.col(4) = batch.iu;
    lhs.col(5) = batch.ir;
    Matrix zt(6, 4);
    for (int col = 0; col < 4; ++col)
        zt.col(col) = solve_least_squares(lhs, batch.dx.col(col));
    return zt.transpose();  // 4 x 6 = [A | B | D]
}

}  // namespace costeer
