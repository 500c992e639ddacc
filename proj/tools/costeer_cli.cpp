#include "costeer/config.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

// Command-line front end: learn / oracle / simulate / ablate.
//   learn     run the data-driven gain synthesis and write a gains file
//   oracle    model-based reference gains for the same config
//   simulate  single scenario run with a chosen trigger mode
//   ablate    variant comparison sweep on one scenario

namespace fs = std::filesystem;
using namespace costeer;

namespace {

TriggerParams resolved_trigger(const AppConfig& cfg, const GainSet& gains) {
    double phi_bound = 0.0;
    if (!cfg.trigger.phi_bound && !(cfg.trigger.a && cfg.trigger.b && cfg.trigger.c)) {
        const PlantMatrices mm = build_matrices(cfg.plant);
        TriggerParams nominal;
        phi_bound = calibrate_phi_bound(cfg.plant, mm, cfg.driver, gains, nominal,
                                        cfg.scenario);
    }
    return resolve_trigger_params(cfg, gains, phi_bound);
}

void print_summary(const std::string& tag, const RunSummary& s) {
    std::cout << tag << ": j_rms=" << s.j_rms << " m, triggers=" << s.triggers
              << ", max|yc|=" << s.max_abs_yc << " m, reduction=" << s.reduction_pct
              << "%\n";
}

int cmd_learn(const std::string& config_path, const std::string& out_path) {
    AppConfig cfg = load_config_file(config_path);
    if (cfg.learn.k0.norm() == 0.0) {
        std::cerr << "learn: adp.k0 must be set to a stabilizing initial gain "
                     "(the open-loop plant is not asymptotically stable)\n";
        return 2;
    }
    const PlantMatrices mm = build_matrices(cfg.plant);
    LearnOutcome out = learn_gains(cfg.plant, mm, cfg.learn);
    save_gains(out.gains, out_path);
    write_iteration_history(out.pi, out_path + ".history.csv");
    std::cout << "learn: " << out.pi.iterations << " policy iterations, K = ["
              << out.gains.k << "], U = " << out.gains.u_ff
              << ", L = " << out.gains.l_ff << "\n";
    std::cout << "learn: wrote " << out_path << " and " << out_path
              << ".history.csv\n";
    return 0;
}

int cmd_oracle(const std::string& config_path, const std::string& out_path) {
    AppConfig cfg = load_config_file(config_path);
    const PlantMatrices mm = build_matrices(cfg.plant);
    GainSet g = oracle_gains(mm, cfg.learn.q, cfg.learn.r, cfg.learn.phi,
                             cfg.learn.gamma, cfg.learn.y_cap);
    save_gains(g, out_path);
    GainReport rep = validate(g, mm, cfg.learn.q, cfg.learn.r);
    std::cout << "oracle: K = [" << g.k << "], U = " << g.u_ff << ", L = " << g.l_ff
              << "\n";
    std::cout << "oracle: are_residual=" << rep.are_residual
              << " ff_residual=" << rep.ff_residual << " |CX|=" << rep.cx_residual
              << "\n";
    std::cout << "oracle: wrote " << out_path << "\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& gains_path,
                 const std::string& trigger, const std::string& out_dir) {
    AppConfig cfg = load_config_file(config_path);
    if (!trigger.empty()) {
        if (trigger == "time")
            cfg.scenario.trigger = TriggerMode::Time;
        else if (trigger == "event")
            cfg.scenario.trigger = TriggerMode::Event;
        else if (trigger == "self")
            cfg.scenario.trigger = TriggerMode::Self;
        else {
            std::cerr << "simulate: --trigger must be time, event or self\n";
            return 2;
        }
    }
    const PlantMatrices mm = build_matrices(cfg.plant);
    GainSet gains = load_gains(gains_path);
    TriggerParams trig = resolved_trigger(cfg, gains);
    RunResult r = run_scenario(cfg.plant, mm, cfg.driver, gains, trig, cfg.scenario);

    fs::create_directories(out_dir);
    export_csv(r.log, (fs::path(out_dir) / "log.csv").string());
    export_summary(r.summary, (fs::path(out_dir) / "summary.json").string());
    print_summary(std::string("simulate[") + to_string(cfg.scenario.trigger) + "]",
                  r.summary);
    if (cfg.scenario.trigger == TriggerMode::Self) {
        std::cout << "simulate: min dwell = " << r.trace.min_dwell()
                  << " s, envelope violations = " << r.monitor.envelope_violations
                  << "/" << r.monitor.checked_steps << " steps\n";
    }
    std::cout << "simulate: wrote " << out_dir << "/log.csv and summary.json\n";
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& gains_path,
               const std::string& out_dir) {
    AppConfig cfg = load_config_file(config_path);
    const PlantMatrices mm = build_matrices(cfg.plant);
    GainSet gains = load_gains(gains_path);
    TriggerParams trig = resolved_trigger(cfg, gains);
    std::vector<AblationRow> rows =
        run_ablation(cfg.plant, mm, cfg.driver, gains, trig, cfg.scenario, out_dir);
    for (const auto& row : rows)
        print_summary(row.variant, row.summary);
    std::cout << "ablate: wrote per-variant CSV/JSON and comparison.csv under "
              << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shared-steering control toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path = "gains.json", gains_path, out_dir = "out";
    std::string trigger;

    auto* learn = app.add_subcommand("learn", "Learn gains from excitation data");
    learn->add_option("--config", config_path, "Config file")->required();
    learn->add_option("--out", out_path, "Output gains file");

    auto* oracle = app.add_subcommand("oracle", "Model-based reference gains");
    oracle->add_option("--config", config_path, "Config file")->required();
    oracle->add_option("--out", out_path, "Output gains file");

    auto* simulate = app.add_subcommand("simulate", "Run one scenario");
    simulate->add_option("--config", config_path, "Config file")->required();
    simulate->add_option("--gains", gains_path, "Gains file")->required();
    simulate->add_option("--trigger", trigger, "time|event|self (overrides config)");
    simulate->add_option("--out", out_dir, "Output directory");

    auto* ablate = app.add_subcommand("ablate", "Run the variant comparison");
    ablate->add_option("--config", config_path, "Config file")->required();
    ablate->add_option("--gains", gains_path, "Gains file")->required();
    ablate->add_option("--out", out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(learn))
            return cmd_learn(config_path, out_path);
        if (app.got_subcommand(oracle))
            return cmd_oracle(config_path, out_path);
        if (app.got_subcommand(simulate))
            return cmd_simulate(config_path, gains_path, trigger, out_dir);
        if (app.got_subcommand(ablate))
            return cmd_ablate(config_path, gains_path, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
