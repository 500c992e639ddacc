#pragma once

#include "costeer/driver.hpp"
#include "costeer/pipeline.hpp"
#include "costeer/sim.hpp"
#include "costeer/trigger.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

// INI-style configuration with sections [plant], [driver], [shared],
// [trigger], [adp], [scenario]. Missing keys fall back to the built-in
// defaults. Road profiles are comma-separated length:curvature pairs.

namespace costeer {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Ini {
  public:
    static Ini parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    static Ini parse(const std::string& text) {
        Ini ini;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = trim(line);
            if (s.empty() || s[0] == '#' || s[0] == ';')
                continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw ConfigError("malformed section header at line " + std::to_string(lineno));
                section = trim(s.substr(1, s.size() - 2));
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected key = value at line " + std::to_string(lineno));
            ini.values_[section + "." + trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
        }
        return ini;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end())
            return fallback;
        try {
            std::size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size())
                throw ConfigError("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("invalid number for " + key + ": " + it->second);
        }
    }

    int get_int(const std::string& key, int fallback) const {
        return static_cast<int>(std::llround(get_double(key, fallback)));
    }

    std::optional<double> get_optional(const std::string& key) const {
        if (!has(key))
            return std::nullopt;
        return get_double(key, 0.0);
    }

  private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
};

inline RoadProfile parse_road(const std::string& text) {
    RoadProfile road;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("road segment must be length:curvature, got " + item);
        RoadSegment seg;
        seg.length = std::stod(item.substr(0, colon));
        seg.curvature = std::stod(item.substr(colon + 1));
        if (seg.length <= 0.0)
            throw ConfigError("road segment length must be positive");
        road.segments.push_back(seg);
    }
    if (road.segments.empty())
        throw ConfigError("road profile has no segments");
    return road;
}

inline Eigen::Vector4d parse_vec4(const std::string& text) {
    std::istringstream in(text);
    Eigen::Vector4d v;
    for (int i = 0; i < 4; ++i)
        if (!(in >> v(i)))
            throw ConfigError("expected 4 numbers, got: " + text);
    return v;
}

struct TriggerConfig {
    double alpha = 0.5;
    std::optional<double> tau_min;  // defaults to the scenario base step
    std::optional<double> a, b, c;  // explicit override of the estimated constants
    std::optional<double> phi_bound;
};

struct AppConfig {
    PlantParams plant;
    DriverParams driver;
    double kappa = 5.0;
    double window = 5.0;
    TriggerConfig trigger;
    LearnOptions learn;
    Scenario scenario;
};

// Case I quarter turn: 50 m entry, quarter circle of radius 31.5 m, exit.
inline RoadProfile default_case1_road() {
    RoadProfile road;
    road.segments = {{50.0, 0.0}, {49.4800843, 1.0 / 31.5}, {200.0, 0.0}};
    return road;
}

// Short curvature-rich profile for the excitation run; segment boundaries
// fall on sample-interval multiples at v_x = 15, dt = 0.1.
inline RoadProfile default_learning_road() {
    RoadProfile road;
    road.segments = {{15.0, 0.02}, {15.0, -0.015}, {15.0, 0.03}, {15.0, -0.01}, {60.0, 0.01}};
    return road;
}

inline AppConfig load_config(const Ini& ini) {
    AppConfig c;
    c.plant.m = ini.get_double("plant.m", c.plant.m);
    c.plant.l_f = ini.get_double("plant.lf", c.plant.l_f);
    c.plant.l_r = ini.get_double("plant.lr", c.plant.l_r);
    c.plant.c_f = ini.get_double("plant.cf", c.plant.c_f);
    c.plant.c_r = ini.get_double("plant.cr", c.plant.c_r);
    c.plant.i_z = ini.get_double("plant.iz", c.plant.i_z);
    c.plant.l_s = ini.get_double("plant.ls", c.plant.l_s);
    c.plant.v_x = ini.get_double("plant.vx", c.plant.v_x);

    c.driver.k1 = ini.get_double("driver.k1", c.driver.k1);
    c.driver.k2 = ini.get_double("driver.k2", c.driver.k2);
    c.driver.k3 = ini.get_double("driver.k3", c.driver.k3);
    c.driver.t1 = ini.get_double("driver.t1", c.driver.t1);
    c.driver.t2 = ini.get_double("driver.t2", c.driver.t2);
    c.driver.t3 = ini.get_double("driver.t3", c.driver.t3);
    c.driver.d1 = ini.get_double("driver.d1", c.driver.d1);
    c.driver.d2 = ini.get_double("driver.d2", c.driver.d2);
    c.driver.v = ini.get_double("driver.v", c.plant.v_x);

    c.kappa = ini.get_double("shared.kappa", c.kappa);
    c.window = ini.get_double("shared.window", c.window);

    c.trigger.alpha = ini.get_double("trigger.alpha", c.trigger.alpha);
    c.trigger.tau_min = ini.get_optional("trigger.tau_min");
    c.trigger.a = ini.get_optional("trigger.a");
    c.trigger.b = ini.get_optional("trigger.b");
    c.trigger.c = ini.get_optional("trigger.c");
    c.trigger.phi_bound = ini.get_optional("trigger.phi_bound");

    const double q_diag = ini.get_double("adp.q", 100.0);
    c.learn.q = q_diag * Matrix::Identity(4, 4);
    c.learn.r = ini.get_double("adp.r", 100.0);
    c.learn.err = ini.get_double("adp.err", 1e-6);
    c.learn.max_iters = ini.get_int("adp.max_iters", 50);
    c.learn.collect.samples = ini.get_int("adp.samples", 40);
    c.learn.collect.dt_sample = ini.get_double("adp.dt_sample", 0.1);
    c.learn.collect.h = ini.get_double("adp.h", 0.005);
    c.learn.noise_amp = ini.get_double("adp.noise_amp", 0.01);
    c.learn.noise_freqs = ini.get_int("adp.noise_freqs", 8);
    c.learn.noise_freq_min = ini.get_double("adp.freq_min", 0.5);
    c.learn.noise_freq_max = ini.get_double("adp.freq_max", 20.0);
    c.learn.seed = static_cast<unsigned>(ini.get_int("adp.seed", 1));
    c.learn.phi = ini.get_double("adp.phi", 1e-4);
    c.learn.gamma = ini.get_double("adp.gamma", 1.0);
    c.learn.y_cap = ini.get_double("adp.y_cap", 5.0);
    c.learn.road = ini.has("adp.road") ? parse_road(ini.get_string("adp.road", ""))
                                       : default_learning_road();
    if (ini.has("adp.k0"))
        c.learn.k0 = parse_vec4(ini.get_string("adp.k0", "")).transpose();

    c.scenario.name = ini.get_string("scenario.name", "case1");
    c.scenario.duration = ini.get_double("scenario.duration", 15.0);
    c.scenario.h = ini.get_double("scenario.h", 0.005);
    c.scenario.kappa = c.kappa;
    c.scenario.window = c.window;
    c.scenario.road = ini.has("scenario.road")
                          ? parse_road(ini.get_string("scenario.road", ""))
                          : default_case1_road();
    if (ini.has("scenario.init"))
        c.scenario.init = parse_vec4(ini.get_string("scenario.init", ""));
    const std::string trig = ini.get_string("scenario.trigger", "self");
    if (trig == "time")
        c.scenario.trigger = TriggerMode::Time;
    else if (trig == "event")
        c.scenario.trigger = TriggerMode::Event;
    else if (trig == "self")
        c.scenario.trigger = TriggerMode::Self;
    else
        throw ConfigError("scenario.trigger must be time, event or self");
    const std::string cnf = ini.get_string("scenario.cnf", "on");
    c.scenario.cnf_on = (cnf == "on" || cnf == "true" || cnf == "1");
    const std::string sig = ini.get_string("scenario.sigma", "adaptive");
    if (sig == "adaptive") {
        c.scenario.sigma.kind = SigmaPolicy::Kind::Adaptive;
    } else if (sig == "full") {
        c.scenario.sigma.kind = SigmaPolicy::Kind::FullAutomation;
    } else if (sig.rfind("fixed:", 0) == 0) {
        c.scenario.sigma.kind = SigmaPolicy::Kind::Fixed;
        c.scenario.sigma.fixed_value = std::stod(sig.substr(6));
    } else {
        throw ConfigError("scenario.sigma must be adaptive, full or fixed:<value>");
    }
    return c;
}

inline AppConfig load_config_file(const std::string& path) {
    return load_config(Ini::parse_file(path));
}

// Trigger parameters resolved against a gain set: explicit a, b, c win,
// otherwise they are estimated from the learned model; phi_bound comes from
// config or from a calibration pass supplied by the caller.
inline TriggerParams resolve_trigger_params(const AppConfig& cfg, const GainSet& gains,
                                            double calibrated_phi_bound) {
    TriggerParams tp;
    tp.alpha = cfg.trigger.alpha;
    tp.tau_min = cfg.trigger.tau_min.value_or(cfg.scenario.h);
    Eigen::SelfAdjointEigenSolver<Matrix> es(cfg.learn.q);
    tp.lambda_min_q = es.eigenvalues().minCoeff();
    tp.lambda_max_q = es.eigenvalues().maxCoeff();
    if (cfg.trigger.a && cfg.trigger.b && cfg.trigger.c) {
        tp.a = *cfg.trigger.a;
        tp.b = *cfg.trigger.b;
        tp.c = *cfg.trigger.c;
    } else {
        const double phi_bound = cfg.trigger.phi_bound.value_or(calibrated_phi_bound);
        estimate_constants(tp, gains, std::nullopt, phi_bound);
        if (cfg.trigger.a) tp.a = *cfg.trigger.a;
        if (cfg.trigger.b) tp.b = *cfg.trigger.b;
        if (cfg.trigger.c) tp.c = *cfg.trigger.c;
    }
    tp.check();
    return tp;
}

}  // namespace costeer
