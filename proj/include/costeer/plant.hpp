#pragma once

#include "costeer/linalg.hpp"

#include <cmath>
#include <vector>

// 2-DOF lateral dynamics: state x = [v_y, r_a, psi_L, y_L], input is the
// front steering angle, disturbance is the road curvature rho.
//   vdot_y  = a11 v_y + a12 r_a + b1 u
//   rdot_a  = a21 v_y + a22 r_a + b2 u
//   psidot_L = r_a - v_x rho
//   ydot_L  = v_y + l_s r_a + v_x psi_L
// Output y_c = -l_s psi_L + y_L.

namespace costeer {

struct InvalidParamsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PlantParams {
    double m = 1370.0;     // vehicle mass, kg
    double l_f = 1.11;     // CoG to front axle, m
    double l_r = 1.756;    // CoG to rear axle, m
    double c_f = 56300.0;  // front cornering stiffness, N/rad
    double c_r = 47250.0;  // rear cornering stiffness, N/rad
    double i_z = 2315.0;   // yaw inertia, kg m^2
    double l_s = 5.0;      // preview distance, m
    double v_x = 15.0;     // longitudinal speed, m/s (model singular at 0)
};

struct VehicleState {
    Eigen::Vector4d x = Eigen::Vector4d::Zero();  // [v_y, r_a, psi_L, y_L]
    double t = 0.0;
};

struct PlantMatrices {
    Eigen::Matrix4d a;
    Eigen::Vector4d b;
    Eigen::RowVector4d c;
    Eigen::Vector4d d;
};

inline PlantMatrices build_matrices(const PlantParams& p) {
    if (p.m <= 0 || p.l_f <= 0 || p.l_r <= 0 || p.c_f <= 0 || p.c_r <= 0 ||
        p.i_z <= 0 || p.l_s <= 0 || p.v_x <= 0)
        throw InvalidParamsError("build_matrices: physical constants must be positive");
    PlantMatrices mm;
    const double a11 = -2.0 * (p.c_f + p.c_r) / (p.m * p.v_x);
    const double a12 = 2.0 * (p.c_r * p.l_r - p.c_f * p.l_f) / (p.m * p.v_x) - p.v_x;
    const double a21 = 2.0 * (p.c_r * p.l_r - p.c_f * p.l_f) / (p.i_z * p.v_x);
    const double a22 = -2.0 * (p.c_f * p.l_f * p.l_f + p.c_r * p.l_r * p.l_r) / (p.i_z * p.v_x);
    mm.a << a11, a12, 0.0, 0.0,
            a21, a22, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            1.0, p.l_s, p.v_x, 0.0;
    mm.b << 2.0 * p.c_f / p.m, 2.0 * p.c_f * p.l_f / p.i_z, 0.0, 0.0;
    mm.c << 0.0, 0.0, -p.l_s, 1.0;
    mm.d << 0.0, 0.0, -p.v_x, 0.0;
    return mm;
}

struct RoadSegment {
    double length = 0.0;     // arc-length span, m
    double curvature = 0.0;  // 1/m, constant over the segment
};

struct RoadProfile {
    std::vector<RoadSegment> segments;

    // Curvature of the containing segment; 0 beyond the profile end.
    double curvature_at(double arclen) const {
        if (arclen < 0.0)
            return 0.0;
        double s = 0.0;
        for (const auto& seg : segments) {
            s += seg.length;
            if (arclen < s)
                return seg.curvature;
        }
        return 0.0;
    }

    double total_length() const {
        double s = 0.0;
        for (const auto& seg : segments)
            s += seg.length;
        return s;
    }
};

inline double output(const VehicleState& s, const PlantParams& p) {
    return -p.l_s * s.x(2) + s.x(3);
}

// Classical fixed-step RK4 on the linear ODE with u, rho held over the step.
inline VehicleState step(const PlantMatrices& mm, const VehicleState& s, double u,
                         double rho, double h) {
    if (h <= 0.0)
        throw InvalidParamsError("step: step size must be positive");
    const Eigen::Vector4d forcing = mm.b * u + mm.d * rho;
    auto f = [&](const Eigen::Vector4d& x) -> Eigen::Vector4d {
        return mm.a * x + forcing;
    };
    const Eigen::Vector4d k1 = f(s.x);
    const Eigen::Vector4d k2 = f(s.x + 0.5 * h * k1);
    const Eigen::Vector4d k3 = f(s.x + 0.5 * h * k2);
    const Eigen::Vector4d k4 = f(s.x + h * k3);
    VehicleState out;
    out.x = s.x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.t = s.t + h;
    if (!out.x.allFinite())
        throw NonFiniteError("step: state diverged");
    return out;
}

}  // namespace costeer
