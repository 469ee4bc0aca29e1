#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "heavyclip/noise.hpp"
#include "heavyclip/objective.hpp"
#include "heavyclip/schedule.hpp"

namespace heavyclip {

// Config problems exit with code 2; check failures with code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ObjectiveSpec {
    std::string name;
    int dim = 1;
    ParamMap params;
};

struct NoiseSpec {
    std::string kind;  // gaussian | pareto_sphere | two_point
    double sigma = 0.0;
    double p = 2.0;
    double alpha = 0.0;
    double magnitude = 0.0;
    double prob = 0.0;
};

struct ScheduleOverride {
    std::optional<double> eta;     // eta+lambda together select the manual regime
    std::optional<double> lambda;
    std::optional<double> p;       // override the (p, sigma) fed to the formulas,
    std::optional<double> sigma;   // e.g. sigma = 0 cells certified at some p
};

inline const std::set<std::string>& known_checks() {
    static const std::set<std::string> s{"lemma2", "per-step", "event",
                                         "freedman", "bound", "rate"};
    return s;
}

struct ExperimentConfig {
    Regime regime = Regime::convex;
    ObjectiveSpec objective;
    NoiseSpec noise;
    std::vector<long> T_list;
    double delta = 0.1;
    int M = 20;
    std::uint64_t base_seed = 1;
    std::optional<double> R1;     // convex placement; x1 = x* + R1 e1
    std::optional<Point> x1;      // explicit start (required shape: dim)
    ScheduleOverride schedule;
    std::set<std::string> checks;
    std::string out_dir = "runs";
    bool emit_trials = true;
};

ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

// Builders from validated specs.
Objective make_objective(const ObjectiveSpec& spec);
NoiseModel make_noise(const NoiseSpec& spec, int dim);

// FNV-1a over the raw config bytes; names the run directory.
std::uint64_t fnv1a64(const std::string& bytes);
std::string run_dir_name(const std::string& config_bytes);

}  // namespace heavyclip
