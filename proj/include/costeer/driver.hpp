#pragma once

#include "costeer/plant.hpp"

#include <cmath>

// Two-point preview driver: near/far preview angles feed the transfer
// chain delta_d = G4 * G3 * (G1 * alpha1 + G2 * alpha2) with
//   G1(s) = (K1/v)(T1 s + 1)/(T2 s + 1)   compensatory
//   G2(s) = K2                            anticipatory
//   G3(s) = 1/(T3 s + 1)                  neuromuscular lag
//   G4(s) = K3
// G1 and G3 are discretized bilinearly, which keeps the DC gains exact.

namespace costeer {

struct DriverParams {
    double k1 = 15.0;
    double k2 = 3.4;
    double k3 = 1.0 / 12.0;
    double t1 = 3.0;    // lead, s
    double t2 = 1.0;    // lag, s
    double t3 = 0.1;    // neuromuscular lag, s
    double d1 = 5.0;    // near preview distance, m
    double d2 = 15.0;   // far preview distance, m
    double v = 15.0;    // vehicle speed, m/s
};

// First-order transfer function (b1 s + b0)/(a1 s + a0) under the
// trapezoidal (Tustin) map s -> (2/h)(z-1)/(z+1).
class FirstOrderTF {
  public:
    FirstOrderTF() = default;
    FirstOrderTF(double b1, double b0, double a1, double a0)
        : b1_(b1), b0_(b0), a1_(a1), a0_(a0) {}

    double step(double u, double h) {
        const double c = 2.0 / h;
        const double den = a1_ * c + a0_;
        const double y = ((b1_ * c + b0_) * u + (b0_ - b1_ * c) * u_prev_ -
                          (a0_ - a1_ * c) * y_prev_) / den;
        u_prev_ = u;
        y_prev_ = y;
        return y;
    }

    void reset() {
        u_prev_ = 0.0;
        y_prev_ = 0.0;
    }

  private:
    double b1_ = 0.0, b0_ = 1.0, a1_ = 0.0, a0_ = 1.0;
    double u_prev_ = 0.0, y_prev_ = 0.0;
};

struct PreviewAngles {
    double alpha1 = 0.0;  // near, rad
    double alpha2 = 0.0;  // far, rad
};

class TwoPointDriver {
  public:
    explicit TwoPointDriver(const DriverParams& p = {})
        : p_(p),
          g1_(p.k1 / p.v * p.t1, p.k1 / p.v, p.t2, 1.0),
          g3_(0.0, 1.0, p.t3, 1.0) {}

    const DriverParams& params() const { return p_; }

    // Near angle from the lateral offset of the near point (lane center
    // relative to the vehicle, so opposite in sign to the tracking
    // deviation), far angle from the curvature seen at the far point.
    // beta = v_y / v_x is the small-angle sideslip.
    PreviewAngles preview_angles(const VehicleState& s, const RoadProfile& road,
                                 double arclen, const PlantParams& plant) const {
        const double y_c = output(s, plant);
        const double e0 = -(y_c + p_.d1 * s.x(2));
        const double beta = s.x(0) / plant.v_x;
        const double rho_far = road.curvature_at(arclen + p_.d2);
        PreviewAngles a;
        a.alpha1 = e0 / p_.d1 + beta;
        a.alpha2 = p_.d2 * rho_far + beta;
        return a;
    }

    // Advances the filter chain one step and returns delta_d.
    double step(double alpha1, double alpha2, double h) {
        const double mixed = g1_.step(alpha1, h) + p_.k2 * alpha2;
        delta_d_ = p_.k3 * g3_.step(mixed, h);
        return delta_d_;
    }

    double last_output() const { return delta_d_; }

    void reset() {
        g1_.reset();
        g3_.reset();
        delta_d_ = 0.0;
    }

  private:
    DriverParams p_;
    FirstOrderTF g1_;
    FirstOrderTF g3_;
    double delta_d_ = 0.0;
};

}  // namespace costeer
