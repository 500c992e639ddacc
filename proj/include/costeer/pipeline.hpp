#pragma once

#include "costeer/adp.hpp"
#include "costeer/cnf.hpp"
#include "costeer/riccati.hpp"

#include <fstream>
#include <string>

// End-to-end gain synthesis: the model-free ADP pipeline and the
// model-based oracle that validates it.

namespace costeer {

struct LearnOptions {
    Eigen::RowVector4d k0 = Eigen::RowVector4d::Zero();  // must stabilize the plant
    Matrix q = 100.0 * Matrix::Identity(4, 4);
    double r = 100.0;
    double err = 1e-6;
    int max_iters = 50;
    CollectOptions collect;
    RoadProfile road;  // learning road; needs nonzero-curvature segments
    double noise_amp = 0.01;
    int noise_freqs = 8;
    double noise_freq_min = 0.5;
    double noise_freq_max = 20.0;
    unsigned seed = 1;
    double phi = 1e-4;
    double gamma = 1.0;
    double y_cap = 5.0;
};

struct LearnOutcome {
    GainSet gains;
    PolicyIterationResult pi;
    RecoveredModel model;
    Feedforward ff;
};

inline LearnOutcome learn_gains(const PlantParams& plant, const PlantMatrices& mm,
                                const LearnOptions& opts) {
    const BasisSet basis = make_basis(plant.l_s);
    const ExplorationNoise noise(opts.noise_amp, opts.noise_freqs,
                                 opts.noise_freq_min, opts.noise_freq_max, opts.seed);
    LearnOutcome out;
    DataBatch batch = collect(mm, opts.road, opts.k0, noise, plant, opts.collect, basis);
    out.pi = policy_iteration(batch, opts.k0, opts.q, opts.r, opts.err, opts.max_iters);
    out.model = recover_model(out.pi, opts.r);
    out.ff = solve_feedforward(out.model, basis, out.pi.k);

    Matrix abd = regress_dynamics(batch);
    out.gains.p = out.pi.p;
    out.gains.k = out.pi.k;
    out.gains.u_ff = out.ff.u;
    out.gains.x_ff = out.ff.x;
    out.gains.l_ff = out.ff.l;
    out.gains.b_est = out.model.b_est;
    out.gains.phi = opts.phi;
    out.gains.gamma = opts.gamma;
    out.gains.y_cap = opts.y_cap;
    out.gains.a_est = abd.block(0, 0, 4, 4);
    out.gains.has_a_est = true;
    return out;
}

// Model-based reference: ARE solution plus the exact feedforward pair from
// [A B; C 0] [X; U]^T = [-D; 0].
inline GainSet oracle_gains(const PlantMatrices& mm, const Matrix& q, double r,
                            double phi = 1e-4, double gamma = 1.0, double y_cap = 5.0) {
    AreSolution are = solve_are(mm.a, mm.b, q, r * Matrix::Identity(1, 1));
    Matrix sys(5, 5);
    sys.setZero();
    sys.block(0, 0, 4, 4) = mm.a;
    sys.block(0, 4, 4, 1) = mm.b;
    sys.block(4, 0, 1, 4) = mm.c;
    Vector rhs(5);
    rhs.head(4) = -mm.d;
    rhs(4) = 0.0;
    Eigen::FullPivLU<Matrix> lu(sys);
    if (!lu.isInvertible())
        throw IllConditionedError("oracle_gains: feedforward system singular");
    Vector sol = lu.solve(rhs);

    GainSet g;
    g.p = are.p;
    g.k = are.k;
    g.x_ff = sol.head(4);
    g.u_ff = sol(4);
    g.l_ff = g.u_ff + (g.k * g.x_ff)(0);
    g.b_est = mm.b;
    g.phi = phi;
    g.gamma = gamma;
    g.y_cap = y_cap;
    g.a_est = mm.a;
    g.has_a_est = true;
    return g;
}

inline void write_iteration_history(const PolicyIterationResult& pi,
                                    const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_iteration_history: cannot open " + path);
    out << "j,p_step_frobenius,k_norm\n";
    for (std::size_t j = 0; j < pi.k_norms.size(); ++j) {
        out << j << ",";
        if (j == 0)
            out << "";
        else
            out << pi.p_step_norms[j];
        out << "," << pi.k_norms[j] << "\n";
    }
}

}  // namespace costeer
