#include "costeer/pipeline.hpp"
#include "costeer/trigger.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace costeer;

namespace {

TriggerParams closed_form_params() {
    TriggerParams p;
    p.alpha = 0.5;
    p.a = 1.0;
    p.b = 1.0;
    p.c = 0.01;
    p.lambda_min_q = 100.0;
    p.lambda_max_q = 100.0;
    p.tau_min = 0.005;
    return p;
}

}  // namespace

TEST_CASE("event threshold closed form at alpha = 0.5, Q = 100 I") {
    TriggerParams p = closed_form_params();
    Eigen::Vector4d x(1.0, 0.0, 0.0, 0.0);
    CHECK(et_threshold(p, x) == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(et_threshold(p, Eigen::Vector4d::Zero()) == 0.0);
}

TEST_CASE("event threshold is quadratically homogeneous") {
    TriggerParams p = closed_form_params();
    Eigen::Vector4d x(0.3, -0.2, 0.1, 0.4);
    CHECK(et_threshold(p, 2.0 * x) ==
          Catch::Approx(4.0 * et_threshold(p, x)).epsilon(1e-12));
}

TEST_CASE("event violation is a strict inequality") {
    TriggerParams p = closed_form_params();
    Eigen::Vector4d x(1.0, 0.0, 0.0, 0.0);
    CHECK_FALSE(et_violated(p, Eigen::Vector4d::Zero(), x));
    // boundary with exactly representable values: ||x||^2 = 2 gives e_T = 1,
    // and ||e||^2 = 1 sits exactly on the threshold
    Eigen::Vector4d xb(1.0, 1.0, 0.0, 0.0);
    Eigen::Vector4d e(1.0, 0.0, 0.0, 0.0);
    CHECK(et_threshold(p, xb) == 1.0);
    CHECK_FALSE(et_violated(p, e, xb));
    Eigen::Vector4d e2(0.8, 0.0, 0.0, 0.0);  // 0.64 > 0.5
    CHECK(et_violated(p, e2, x));
}

TEST_CASE("self-triggered dwell closed form") {
    TriggerParams p = closed_form_params();
    Eigen::Vector4d x(1.0, 0.0, 0.0, 0.0);
    const double expected = 0.5 * std::log(1.0 + 2.0 / 1.01 * std::sqrt(0.5));
    CHECK(st_dwell_raw(p, x) == Catch::Approx(expected).epsilon(1e-12));  // ~ 0.4377
}

TEST_CASE("zero state falls back to the minimum dwell") {
    TriggerParams p = closed_form_params();
    CHECK(st_dwell_raw(p, Eigen::Vector4d::Zero()) == 0.0);
    CHECK(st_next_instant(p, 2.0, Eigen::Vector4d::Zero(), 0.005) ==
          Catch::Approx(2.005).epsilon(1e-12));
}

TEST_CASE("dwell rounds up to base-step multiples") {
    TriggerParams p = closed_form_params();
    Eigen::Vector4d x(1.0, 0.0, 0.0, 0.0);
    const double next = st_next_instant(p, 0.0, x, 0.005);
    const double steps = next / 0.005;
    CHECK(std::abs(steps - std::round(steps)) < 1e-9);
    CHECK(next >= st_dwell_raw(p, x) - 1e-12);
    CHECK(next - st_dwell_raw(p, x) < 0.005 + 1e-12);
}

TEST_CASE("dwell is monotone nonincreasing in b") {
    TriggerParams p = closed_form_params();
    Eigen::Vector4d x(0.4, -0.1, 0.2, 0.3);
    p.b = 0.5;
    double prev = st_dwell_raw(p, x);
    for (double b : {1.0, 2.0, 5.0, 20.0, 100.0}) {
        p.b = b;
        const double cur = st_dwell_raw(p, x);
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }
}

TEST_CASE("parameter validation") {
    TriggerParams p = closed_form_params();
    p.alpha = 1.0;
    CHECK_THROWS_AS(p.check(), std::invalid_argument);
    p = closed_form_params();
    p.a = 0.0;
    CHECK_THROWS_AS(p.check(), std::invalid_argument);
}

TEST_CASE("trace dwell bookkeeping") {
    TriggerTrace tr;
    tr.events.push_back({0.0, Eigen::Vector4d::Zero(), 0.0, 0.0});
    tr.events.push_back({0.015, Eigen::Vector4d::Zero(), 0.0, 0.0});
    tr.events.push_back({0.020, Eigen::Vector4d::Zero(), 0.0, 0.0});
    CHECK(tr.count() == 3);
    CHECK(tr.min_dwell() == Catch::Approx(0.005).epsilon(1e-9));
}

TEST_CASE("constants estimated from the oracle model") {
    PlantMatrices mm = build_matrices(PlantParams{});
    GainSet g = oracle_gains(mm, 100.0 * Matrix::Identity(4, 4), 100.0);
    TriggerParams p = closed_form_params();
    estimate_constants(p, g, Matrix(mm.a), 1e-3);
    CHECK(p.a == Catch::Approx(spectral_norm(mm.a)).epsilon(1e-10));
    const double l_u = g.k.norm() + g.phi * (mm.b.transpose() * g.p).norm();
    CHECK(p.b == Catch::Approx(mm.b.norm() * l_u).epsilon(1e-10));
    CHECK(p.c == Catch::Approx(mm.b.norm() * 1e-3).epsilon(1e-10));
}

TEST_CASE("degenerate constants fall back to the floor") {
    PlantMatrices mm = build_matrices(PlantParams{});
    GainSet g = oracle_gains(mm, 100.0 * Matrix::Identity(4, 4), 100.0);
    g.k.setZero();
    g.phi = 0.0;
    TriggerParams p = closed_form_params();
    estimate_constants(p, g, Matrix(mm.a), 0.0);
    CHECK(p.b == 1e-3);
    CHECK(p.c == 1e-3);
    CHECK_NOTHROW(p.check());
}

TEST_CASE("missing model raises") {
    GainSet g;  // no a_est
    TriggerParams p = closed_form_params();
    CHECK_THROWS_AS(estimate_constants(p, g, std::nullopt, 1e-3), MissingModelError);
}
