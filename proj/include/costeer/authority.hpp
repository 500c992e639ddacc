#pragma once

#include <algorithm>
#include <deque>
#include <stdexcept>

// Cooperation-based authority allocation. CI(t) is the trailing-window
// integral of delta_d * delta_c; sigma = 0.5 + kappa * CI, clamped to [0,1].
// The blended command is u = (1 - sigma) delta_d + sigma delta_c.

namespace costeer {

class AuthorityAllocator {
  public:
    AuthorityAllocator(double kappa = 5.0, double window = 5.0)
        : kappa_(kappa), window_(window) {
        if (kappa <= 0.0 || window <= 0.0)
            throw std::invalid_argument("AuthorityAllocator: kappa and window must be positive");
    }

    // Trapezoidal accumulation of delta_d * delta_c over the trailing
    // window; during the first window seconds the integral runs from 0.
    void update_ci(double delta_d, double delta_c, double h) {
        if (h <= 0.0)
            throw std::invalid_argument("update_ci: step must be positive");
        samples_.push_back({t_, delta_d * delta_c});
        t_ += h;
        const double newest = samples_.back().t;
        while (samples_.size() > 1 && samples_.front().t < newest - window_ - 0.5 * h)
            samples_.pop_front();
        ci_ = 0.0;
        for (std::size_t i = 1; i < samples_.size(); ++i)
            ci_ += 0.5 * (samples_[i].product + samples_[i - 1].product) *
                   (samples_[i].t - samples_[i - 1].t);
    }

    double ci() const { return ci_; }

    double authority() const {
        return std::clamp(0.5 + kappa_ * ci_, 0.0, 1.0);
    }

    void reset() {
        samples_.clear();
        ci_ = 0.0;
        t_ = 0.0;
    }

  private:
    struct Sample {
        double t;
        double product;
    };
    double kappa_;
    double window_;
    double ci_ = 0.0;
    double t_ = 0.0;
    std::deque<Sample> samples_;
};

inline double blend(double sigma, double delta_d, double delta_c) {
    if (sigma < 0.0 || sigma > 1.0)
        throw std::invalid_argument("blend: sigma outside [0,1]");
    return (1.0 - sigma) * delta_d + sigma * delta_c;
}

}  // namespace costeer
