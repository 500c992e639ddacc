#pragma once

#include "costeer/cnf.hpp"
#include "costeer/linalg.hpp"

#include <cmath>
#include <optional>
#include <vector>

// Event-triggered threshold and self-triggered dwell rule.
//   e_T = [(1 - alpha) lambda_min(Q)] / [(1/alpha - 1) lambda_max(Q)] ||x_ek||^2
//   tau_{k+1} = tau_k + (1/(a+b)) ln(1 + (a+b)/(a ||x_ek|| + c) sqrt(e_T))
// with a, b, c the Lipschitz/bound constants of the closed loop.

namespace costeer {

struct MissingModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TriggerParams {
    double alpha = 0.5;        // in (0,1)
    double a = 1.0;            // L_f
    double b = 1.0;            // ||B|| L_u
    double c = 0.01;           // ||B|| phi_bound
    double lambda_min_q = 100.0;
    double lambda_max_q = 100.0;
    double tau_min = 0.005;    // minimum dwell, >= base step

    void check() const {
        if (alpha <= 0.0 || alpha >= 1.0)
            throw std::invalid_argument("TriggerParams: alpha must be in (0,1)");
        if (a <= 0.0 || b <= 0.0 || c <= 0.0 || tau_min <= 0.0)
            throw std::invalid_argument("TriggerParams: a, b, c, tau_min must be positive");
    }
};

struct TriggerEvent {
    double tau = 0.0;
    Eigen::Vector4d x_ek = Eigen::Vector4d::Zero();
    double u_k = 0.0;
    double dwell = 0.0;  // to the next trigger (0 for the last event until closed)
};

struct TriggerTrace {
    std::vector<TriggerEvent> events;
    std::size_t count() const { return events.size(); }
    double min_dwell() const {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < events.size(); ++i)
            m = std::min(m, events[i + 1].tau - events[i].tau);
        return m;
    }
};

inline double et_threshold(const TriggerParams& p, const Eigen::Vector4d& x_ek) {
    p.check();
    const double coef = ((1.0 - p.alpha) * p.lambda_min_q) /
                        ((1.0 / p.alpha - 1.0) * p.lambda_max_q);
    return coef * x_ek.squaredNorm();
}

// Strict inequality: the boundary ||e||^2 == e_T does not trigger.
inline bool et_violated(const TriggerParams& p, const Eigen::Vector4d& e,
                        const Eigen::Vector4d& x_ek) {
    return e.squaredNorm() > et_threshold(p, x_ek);
}

// Raw self-triggered dwell before the tau_min floor and step rounding.
inline double st_dwell_raw(const TriggerParams& p, const Eigen::Vector4d& x_ek) {
    p.check();
    const double e_t = et_threshold(p, x_ek);
    const double denom = p.a * x_ek.norm() + p.c;
    return 1.0 / (p.a + p.b) * std::log1p((p.a + p.b) / denom * std::sqrt(e_t));
}

// Next instant: dwell floored at tau_min, then rounded up to the next
// base-step multiple so the fixed-step loop can realize it.
inline double st_next_instant(const TriggerParams& p, double tau_k,
                              const Eigen::Vector4d& x_ek, double h) {
    double dwell = std::max(p.tau_min, st_dwell_raw(p, x_ek));
    dwell = std::ceil(dwell / h - 1e-9) * h;
    return tau_k + dwell;
}

// a = ||A||_2 (Lipschitz constant of the linear drift), b = ||B|| L_u with
// L_u = ||K|| + phi ||B^T P|| the Lipschitz bound of u(x) = -K x + u_N,
// c = ||B|| phi_bound with phi_bound bounding ||u_e||. Degenerate values
// fall back to a configured floor.
inline void estimate_constants(TriggerParams& p, const GainSet& g,
                               const std::optional<Matrix>& a_est,
                               double phi_bound, double floor_val = 1e-3) {
    Matrix a_mat;
    if (a_est.has_value())
        a_mat = *a_est;
    else if (g.has_a_est)
        a_mat = g.a_est;
    else
        throw MissingModelError("estimate_constants: no A estimate and no configured constants");
    const double b_norm = g.b_est.norm();
    const double l_u = g.k.norm() + g.phi * (g.b_est.transpose() * g.p).norm();
    p.a = std::max(spectral_norm(a_mat), floor_val);
    p.b = std::max(b_norm * l_u, floor_val);
    p.c = std::max(b_norm * phi_bound, floor_val);
}

}  // namespace costeer
