#include "costeer/config.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace costeer;

TEST_CASE("ini parsing basics") {
    Ini ini = Ini::parse(
        "# comment\n"
        "; also a comment\n"
        "[plant]\n"
        "m = 1500\n"
        "  vx =  20  \n"
        "\n"
        "[scenario]\n"
        "name = demo\n");
    CHECK(ini.has("plant.m"));
    CHECK(ini.get_double("plant.m", 0.0) == 1500.0);
    CHECK(ini.get_double("plant.vx", 0.0) == 20.0);
    CHECK(ini.get_string("scenario.name", "") == "demo");
    CHECK_FALSE(ini.has("plant.lf"));
    CHECK(ini.get_double("plant.lf", 1.11) == 1.11);
}

TEST_CASE("ini rejects malformed input") {
    CHECK_THROWS_AS(Ini::parse("[plant\nm = 1\n"), ConfigError);
    CHECK_THROWS_AS(Ini::parse("[plant]\njust a line\n"), ConfigError);
    Ini bad = Ini::parse("[plant]\nm = abc\n");
    CHECK_THROWS_AS(bad.get_double("plant.m", 0.0), ConfigError);
    CHECK_THROWS_AS(Ini::parse_file("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("road profile parsing") {
    RoadProfile road = parse_road("50:0,49.48:0.031746,200:0");
    REQUIRE(road.segments.size() == 3);
    CHECK(road.segments[0].length == 50.0);
    CHECK(road.segments[1].curvature == Catch::Approx(0.031746));
    CHECK(road.total_length() == Catch::Approx(299.48));

    CHECK_THROWS_AS(parse_road(""), ConfigError);
    CHECK_THROWS_AS(parse_road("50"), ConfigError);
    CHECK_THROWS_AS(parse_road("-5:0.1"), ConfigError);
}

TEST_CASE("vec4 parsing") {
    Eigen::Vector4d v = parse_vec4("0 0 0 -0.2");
    CHECK(v(3) == -0.2);
    CHECK_THROWS_AS(parse_vec4("1 2 3"), ConfigError);
}

TEST_CASE("defaults match the nominal parameter set") {
    AppConfig c = load_config(Ini::parse(""));
    CHECK(c.plant.m == 1370.0);
    CHECK(c.plant.l_f == 1.11);
    CHECK(c.plant.l_r == 1.756);
    CHECK(c.plant.c_f == 56300.0);
    CHECK(c.plant.c_r == 47250.0);
    CHECK(c.plant.i_z == 2315.0);
    CHECK(c.plant.l_s == 5.0);
    CHECK(c.plant.v_x == 15.0);
    CHECK(c.driver.k1 == 15.0);
    CHECK(c.driver.k2 == 3.4);
    CHECK(c.driver.k3 == Catch::Approx(1.0 / 12.0));
    CHECK(c.kappa == 5.0);
    CHECK(c.window == 5.0);
    CHECK(c.trigger.alpha == 0.5);
    CHECK_FALSE(c.trigger.a.has_value());
    CHECK(c.learn.r == 100.0);
    CHECK(c.learn.q(0, 0) == 100.0);
    CHECK(c.scenario.duration == 15.0);
    CHECK(c.scenario.h == 0.005);
    CHECK(c.scenario.trigger == TriggerMode::Self);
    CHECK(c.scenario.cnf_on);
    CHECK(c.scenario.sigma.kind == SigmaPolicy::Kind::Adaptive);
    CHECK(c.scenario.init.norm() == 0.0);
    CHECK(c.scenario.road.total_length() == Catch::Approx(299.4800843));
}

TEST_CASE("full config round trip") {
    AppConfig c = load_config(Ini::parse(
        "[plant]\n"
        "vx = 20\n"
        "[driver]\n"
        "d1 = 6\n"
        "[shared]\n"
        "kappa = 3\n"
        "window = 2.5\n"
        "[trigger]\n"
        "alpha = 0.9\n"
        "a = 6.2\n"
        "b = 102.8\n"
        "c = 0.5\n"
        "tau_min = 0.01\n"
        "[adp]\n"
        "q = 50\n"
        "r = 10\n"
        "seed = 7\n"
        "k0 = 0.3 0.6 2.0 0.6\n"
        "road = 10:0.01,10:-0.01\n"
        "[scenario]\n"
        "name = case2\n"
        "duration = 90\n"
        "road = 30:0,200:0.0166667\n"
        "init = 0 0 0 -0.2\n"
        "trigger = event\n"
        "cnf = off\n"
        "sigma = fixed:0.7\n"));
    CHECK(c.plant.v_x == 20.0);
    CHECK(c.driver.d1 == 6.0);
    CHECK(c.kappa == 3.0);
    CHECK(c.window == 2.5);
    CHECK(c.trigger.alpha == 0.9);
    CHECK(c.trigger.a.value() == 6.2);
    CHECK(c.trigger.tau_min.value() == 0.01);
    CHECK(c.learn.q(2, 2) == 50.0);
    CHECK(c.learn.r == 10.0);
    CHECK(c.learn.seed == 7u);
    CHECK(c.learn.k0(0, 2) == 2.0);
    CHECK(c.learn.road.segments.size() == 2);
    CHECK(c.scenario.name == "case2");
    CHECK(c.scenario.duration == 90.0);
    CHECK(c.scenario.kappa == 3.0);
    CHECK(c.scenario.road.segments.size() == 2);
    CHECK(c.scenario.init(3) == -0.2);
    CHECK(c.scenario.trigger == TriggerMode::Event);
    CHECK_FALSE(c.scenario.cnf_on);
    CHECK(c.scenario.sigma.kind == SigmaPolicy::Kind::Fixed);
    CHECK(c.scenario.sigma.fixed_value == 0.7);
}

TEST_CASE("invalid enumerations are rejected") {
    CHECK_THROWS_AS(load_config(Ini::parse("[scenario]\ntrigger = periodic\n")), ConfigError);
    CHECK_THROWS_AS(load_config(Ini::parse("[scenario]\nsigma = sometimes\n")), ConfigError);
}

TEST_CASE("config file loading") {
    const auto dir = std::filesystem::temp_directory_path() / "costeer_config_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "demo.ini";
    {
        std::ofstream out(path);
        out << "[scenario]\nduration = 30\n";
    }
    AppConfig c = load_config_file(path.string());
    CHECK(c.scenario.duration == 30.0);
}

TEST_CASE("trigger parameter resolution") {
    PlantParams plant;
    PlantMatrices mm = build_matrices(plant);
    GainSet gains = oracle_gains(mm, 100.0 * Matrix::Identity(4, 4), 100.0);
    gains.a_est = mm.a;
    gains.has_a_est = true;

    SECTION("explicit constants win") {
        AppConfig cfg = load_config(Ini::parse(
            "[trigger]\nalpha = 0.9\na = 6.2\nb = 102.8\nc = 0.5\n"));
        TriggerParams tp = resolve_trigger_params(cfg, gains, 0.1);
        CHECK(tp.alpha == 0.9);
        CHECK(tp.a == 6.2);
        CHECK(tp.b == 102.8);
        CHECK(tp.c == 0.5);
        CHECK(tp.tau_min == 0.005);
        CHECK(tp.lambda_min_q == 100.0);
        CHECK(tp.lambda_max_q == 100.0);
    }
    SECTION("estimated constants from the model otherwise") {
        AppConfig cfg = load_config(Ini::parse("[trigger]\nphi_bound = 0.01\n"));
        TriggerParams tp = resolve_trigger_params(cfg, gains, 999.0);
        CHECK(tp.a == Catch::Approx(spectral_norm(mm.a)));
        CHECK(tp.c == Catch::Approx(gains.b_est.norm() * 0.01));
    }
    SECTION("calibrated phi_bound is the fallback") {
        AppConfig cfg = load_config(Ini::parse(""));
        TriggerParams tp = resolve_trigger_params(cfg, gains, 0.02);
        CHECK(tp.c == Catch::Approx(gains.b_est.norm() * 0.02));
    }
    SECTION("missing model is reported") {
        GainSet bare = gains;
        bare.has_a_est = false;
        AppConfig cfg = load_config(Ini::parse(""));
        CHECK_THROWS_AS(resolve_trigger_params(cfg, bare, 0.02), MissingModelError);
    }
}
