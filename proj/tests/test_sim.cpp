#include "costeer/config.hpp"
#include "costeer/pipeline.hpp"
#include "costeer/sim.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace costeer;

namespace {

SimLog synthetic_log(double duration, double h, double (*f)(double)) {
    SimLog log;
    const auto n = static_cast<std::size_t>(std::llround(duration / h)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * h;
        LogRow row{};
        row.t = t;
        row.y_c = f(t);
        log.rows.push_back(row);
    }
    return log;
}

struct Fixture {
    PlantParams plant;
    PlantMatrices mm;
    DriverParams driver;
    GainSet gains;
    TriggerParams trig;

    Fixture() : mm(build_matrices(plant)) {
        gains = oracle_gains(mm, 100.0 * Matrix::Identity(4, 4), 100.0);
        trig.alpha = 0.9;
        trig.a = 6.19695;
        trig.b = 102.781;
        trig.c = 0.5;
        trig.lambda_min_q = 100.0;
        trig.lambda_max_q = 100.0;
        trig.tau_min = 0.005;
    }

    Scenario case1() const {
        Scenario sc;
        sc.road = default_case1_road();
        sc.duration = 15.0;
        sc.init << 0, 0, 0, -0.2;
        return sc;
    }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("j_rms closed forms") {
    SECTION("empty log rejected") {
        CHECK_THROWS_AS(j_rms(SimLog{}), std::invalid_argument);
    }
    SECTION("zero output gives zero") {
        auto log = synthetic_log(1.0, 0.005, +[](double) { return 0.0; });
        CHECK(j_rms(log) == 0.0);
    }
    SECTION("constant output gives the constant") {
        auto log = synthetic_log(2.0, 0.005, +[](double) { return 0.1; });
        CHECK_THAT(j_rms(log), Catch::Matchers::WithinAbs(0.1, 1e-12));
    }
    SECTION("sine over a full period gives sqrt(1/2)") {
        // grid chosen to land exactly on the period boundary
        auto log = synthetic_log(2.0 * M_PI, 2.0 * M_PI / 1256.0,
                                 +[](double t) { return std::sin(t); });
        CHECK_THAT(j_rms(log), Catch::Matchers::WithinAbs(std::sqrt(0.5), 1e-6));
    }
    SECTION("scaling the output scales the metric linearly") {
        auto log = synthetic_log(3.0, 0.005, +[](double t) { return std::sin(1.3 * t) + 0.2; });
        const double base = j_rms(log);
        for (auto& row : log.rows)
            row.y_c *= -2.5;
        CHECK_THAT(j_rms(log), Catch::Matchers::WithinRel(2.5 * base, 1e-12));
    }
}

TEST_CASE("time-triggered counts and row bookkeeping") {
    Fixture fx;
    Scenario sc = fx.case1();
    sc.trigger = TriggerMode::Time;
    RunResult r = run_scenario(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc);
    CHECK(r.summary.triggers == 3000);
    CHECK(r.log.rows.size() == 3000);
    CHECK(r.summary.reduction_pct == 0.0);
    for (const auto& row : r.log.rows)
        CHECK(row.trigger);
}

TEST_CASE("zero road and zero state stays at rest") {
    Fixture fx;
    Scenario sc;
    sc.road.segments = {{500.0, 0.0}};
    sc.duration = 10.0;
    sc.trigger = TriggerMode::Time;
    RunResult r = run_scenario(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc);
    CHECK(r.summary.j_rms < 1e-6);
    CHECK(r.summary.max_abs_yc < 1e-6);
}

TEST_CASE("row count is conserved across variants") {
    Fixture fx;
    for (TriggerMode mode : {TriggerMode::Time, TriggerMode::Event, TriggerMode::Self}) {
        Scenario sc = fx.case1();
        sc.trigger = mode;
        RunResult r = run_scenario(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc);
        CHECK(r.log.rows.size() == 3000);
        double t_prev = -1.0;
        for (const auto& row : r.log.rows) {
            CHECK(row.t > t_prev);
            t_prev = row.t;
        }
    }
}

TEST_CASE("self-triggered run respects the envelope and the dwell floor") {
    Fixture fx;
    Scenario sc = fx.case1();
    sc.trigger = TriggerMode::Self;
    RunResult r = run_scenario(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc);
    CHECK(r.monitor.envelope_violations == 0);
    CHECK(r.monitor.checked_steps > 0);
    CHECK(r.trace.min_dwell() >= sc.h - 1e-9);  // dwell measured on the float time grid
    CHECK(r.summary.triggers < 3000);
    CHECK(r.summary.reduction_pct ==
          Catch::Approx(100.0 * (1.0 - static_cast<double>(r.summary.triggers) / 3000.0)));
}

TEST_CASE("event-triggered run fires no more often than time-triggered") {
    Fixture fx;
    Scenario sc = fx.case1();
    sc.trigger = TriggerMode::Event;
    RunResult r = run_scenario(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc);
    CHECK(r.summary.triggers >= 1);
    CHECK(r.summary.triggers <= 3000);
}

TEST_CASE("csv export format") {
    Fixture fx;
    Scenario sc = fx.case1();
    sc.duration = 0.5;
    sc.trigger = TriggerMode::Self;
    RunResult r = run_scenario(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc);

    const auto dir = std::filesystem::temp_directory_path() / "costeer_sim_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "log.csv";
    export_csv(r.log, path.string());

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,vy,ra,psiL,yL,yc,delta_d,delta_c,u,sigma,ci,rho,trigger");

    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++rows;
        const auto last_comma = line.rfind(',');
        REQUIRE(last_comma != std::string::npos);
        const std::string flag = line.substr(last_comma + 1);
        CHECK((flag == "0" || flag == "1"));
    }
    CHECK(rows == r.log.rows.size());
}

TEST_CASE("summary json keys") {
    RunSummary s;
    s.j_rms = 0.25;
    s.triggers = 42;
    s.max_abs_yc = 0.5;
    s.reduction_pct = 30.0;
    const auto dir = std::filesystem::temp_directory_path() / "costeer_sim_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "summary.json";
    export_summary(s, path.string());
    nlohmann::json j = nlohmann::json::parse(slurp(path));
    CHECK(j.at("j_rms").get<double>() == 0.25);
    CHECK(j.at("triggers").get<std::size_t>() == 42);
    CHECK(j.at("max_abs_yc").get<double>() == 0.5);
    CHECK(j.at("reduction_pct").get<double>() == 30.0);
}

TEST_CASE("simulation is deterministic") {
    Fixture fx;
    Scenario sc = fx.case1();
    sc.duration = 2.0;
    sc.trigger = TriggerMode::Self;
    const auto dir = std::filesystem::temp_directory_path() / "costeer_sim_test";
    std::filesystem::create_directories(dir);

    RunResult a = run_scenario(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc);
    RunResult b = run_scenario(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc);
    export_csv(a.log, (dir / "a.csv").string());
    export_csv(b.log, (dir / "b.csv").string());
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
}

TEST_CASE("ablation variant set") {
    Fixture fx;
    Scenario sc = fx.case1();
    sc.duration = 3.0;
    auto rows = run_ablation(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].variant == "proposed");
    CHECK(rows[1].variant == "no_cnf");
    CHECK(rows[2].variant == "fixed_sigma_0.3");
    CHECK(rows[3].variant == "fixed_sigma_0.5");
    CHECK(rows[4].variant == "fixed_sigma_0.7");
    CHECK(rows[5].variant == "time_triggered");
    CHECK(rows[5].summary.triggers == 600);
    for (const auto& row : rows)
        if (row.variant != "time_triggered")
            CHECK(row.summary.triggers < rows[5].summary.triggers);
}

TEST_CASE("fixed-sigma variant holds sigma constant while CI is still logged") {
    Fixture fx;
    Scenario sc = fx.case1();
    sc.duration = 2.0;
    sc.trigger = TriggerMode::Self;
    sc.sigma.kind = SigmaPolicy::Kind::Fixed;
    sc.sigma.fixed_value = 0.3;
    RunResult r = run_scenario(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc);
    bool ci_moves = false;
    for (const auto& row : r.log.rows) {
        CHECK(row.sigma == 0.3);
        if (row.ci != 0.0)
            ci_moves = true;
    }
    CHECK(ci_moves);
}

TEST_CASE("invalid scenario parameters are rejected") {
    Fixture fx;
    Scenario sc = fx.case1();
    sc.duration = 0.0;
    CHECK_THROWS_AS(run_scenario(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc),
                    std::invalid_argument);
    sc = fx.case1();
    sc.h = -0.005;
    CHECK_THROWS_AS(run_scenario(fx.plant, fx.mm, fx.driver, fx.gains, fx.trig, sc),
                    std::invalid_argument);
}
