#pragma once

#include "costeer/plant.hpp"
#include "costeer/linalg.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <string>

// Composite nonlinear feedback law evaluated at trigger instants:
//   u_k = -K x_k + L rho + u_N,  u_N = rho_y B^T P x_e,
//   rho_y = -phi exp(-gamma y),  x_e = x_k - X rho.
// The command is held constant until the next trigger.

namespace costeer {

struct GainSet {
    Eigen::Matrix4d p = Eigen::Matrix4d::Zero();
    Eigen::RowVector4d k = Eigen::RowVector4d::Zero();
    double u_ff = 0.0;                              // U in L = U + K X
    Eigen::Vector4d x_ff = Eigen::Vector4d::Zero(); // X, steady-state manifold per unit rho
    double l_ff = 0.0;                              // L = U + K X
    Eigen::Vector4d b_est = Eigen::Vector4d::Zero();
    double phi = 1e-4;
    double gamma = 1.0;
    double y_cap = 5.0;  // bound on |rho_y| for negative outputs: |rho_y| <= phi e^{gamma y_cap}
    Eigen::Matrix4d a_est = Eigen::Matrix4d::Zero();  // regressed dynamics, for trigger constants
    bool has_a_est = false;
};

struct HeldCommand {
    double u_k = 0.0;
    double trigger_time = 0.0;
    VehicleState sampled;
};

inline double rho_y(const GainSet& g, double y) {
    const double mag = std::min(g.phi * std::exp(-g.gamma * y),
                                g.phi * std::exp(g.gamma * g.y_cap));
    return -mag;
}

inline double nonlinear_term(const GainSet& g, const Eigen::Vector4d& x_k,
                             double rho, double y) {
    const Eigen::Vector4d x_e = x_k - g.x_ff * rho;
    return rho_y(g, y) * (g.b_est.transpose() * g.p * x_e)(0);
}

inline HeldCommand control_at_trigger(const GainSet& g, const VehicleState& s,
                                      double rho, double y) {
    HeldCommand cmd;
    cmd.sampled = s;
    cmd.trigger_time = s.t;
    cmd.u_k = -(g.k * s.x)(0) + g.l_ff * rho + nonlinear_term(g, s.x, rho, y);
    return cmd;
}

struct GainReport {
    double are_residual = 0.0;
    double ff_residual = 0.0;    // ||A X + B U + D||
    double cx_residual = 0.0;    // |C X|
    double l_residual = 0.0;     // |L - U - K X|
    bool closed_loop_hurwitz = false;
};

// Cross-checks a gain set against a model; reporting only, never throws.
inline GainReport validate(const GainSet& g, const PlantMatrices& mm,
                           const Matrix& q, double r) {
    GainReport rep;
    Matrix res = mm.a.transpose() * g.p + g.p * mm.a + q -
                 g.p * mm.b * (1.0 / r) * mm.b.transpose() * g.p;
    rep.are_residual = res.norm();
    rep.ff_residual = (mm.a * g.x_ff + mm.b * g.u_ff + mm.d).norm();
    rep.cx_residual = std::abs((mm.c * g.x_ff)(0));
    rep.l_residual = std::abs(g.l_ff - g.u_ff - (g.k * g.x_ff)(0));
    rep.closed_loop_hurwitz = is_hurwitz(mm.a - mm.b * g.k);
    return rep;
}

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(i, c) = j.at(i).at(c).get<double>();
    return m;
}

}  // namespace detail

inline nlohmann::json gains_to_json(const GainSet& g) {
    nlohmann::json j;
    j["p"] = detail::matrix_to_json(g.p);
    j["k"] = detail::matrix_to_json(g.k);
    j["u"] = g.u_ff;
    j["x"] = detail::matrix_to_json(g.x_ff);
    j["l"] = g.l_ff;
    j["b_est"] = detail::matrix_to_json(g.b_est);
    j["phi"] = g.phi;
    j["gamma"] = g.gamma;
    j["y_cap"] = g.y_cap;
    if (g.has_a_est)
        j["a_est"] = detail::matrix_to_json(g.a_est);
    return j;
}

inline GainSet gains_from_json(const nlohmann::json& j) {
    GainSet g;
    g.p = detail::matrix_from_json(j.at("p"));
    g.k = detail::matrix_from_json(j.at("k"));
    g.u_ff = j.at("u").get<double>();
    g.x_ff = detail::matrix_from_json(j.at("x"));
    g.l_ff = j.at("l").get<double>();
    g.b_est = detail::matrix_from_json(j.at("b_est"));
    g.phi = j.at("phi").get<double>();
    g.gamma = j.at("gamma").get<double>();
    g.y_cap = j.value("y_cap", 5.0);
    if (j.contains("a_est")) {
        g.a_est = detail::matrix_from_json(j.at("a_est"));
        g.has_a_est = true;
    }
    return g;
}

inline void save_gains(const GainSet& g, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_gains: cannot open " + path);
    out << gains_to_json(g).dump(2) << "\n";
}

inline GainSet load_gains(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_gains: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return gains_from_json(j);
}

}  // namespace costeer
