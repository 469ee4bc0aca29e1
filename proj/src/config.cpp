#include "heavyclip/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace heavyclip {

using nlohmann::json;

namespace {

double require_number(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_number())
        throw ConfigError("config field '" + field + "' must be a number");
    return j[field].get<double>();
}

std::string require_string(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_string())
        throw ConfigError("config field '" + field + "' must be a string");
    return j[field].get<std::string>();
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    ExperimentConfig c;

    std::string regime = require_string(j, "regime");
    try {
        c.regime = regime_from_name(regime);
    } catch (const std::exception&) {
        throw ConfigError("config field 'regime' must be convex, nonconvex or manual");
    }

    if (!j.contains("objective") || !j["objective"].is_object())
        throw ConfigError("config field 'objective' must be an object");
    const json& jo = j["objective"];
    c.objective.name = require_string(jo, "name");
    double dim = require_number(jo, "dim");
    if (dim < 1 || dim != std::floor(dim)) throw ConfigError("config field 'objective.dim' must be a positive integer");
    c.objective.dim = static_cast<int>(dim);
    if (jo.contains("params")) {
        if (!jo["params"].is_object()) throw ConfigError("config field 'objective.params' must be an object");
        for (auto it = jo["params"].begin(); it != jo["params"].end(); ++it) {
            std::vector<double> v;
            if (it.value().is_number())
                v.push_back(it.value().get<double>());
            else if (it.value().is_array())
                for (const auto& e : it.value()) {
                    if (!e.is_number())
                        throw ConfigError("config field 'objective.params." + it.key() +
                                          "' must be numeric");
                    v.push_back(e.get<double>());
                }
            else
                throw ConfigError("config field 'objective.params." + it.key() +
                                  "' must be a number or array");
            c.objective.params[it.key()] = std::move(v);
        }
    }

    if (!j.contains("noise") || !j["noise"].is_object())
        throw ConfigError("config field 'noise' must be an object");
    const json& jn = j["noise"];
    c.noise.kind = require_string(jn, "kind");
    if (c.noise.kind == "gaussian") {
        c.noise.sigma = require_number(jn, "sigma");
        c.noise.p = 2.0;
    } else if (c.noise.kind == "pareto_sphere") {
        c.noise.sigma = require_number(jn, "sigma");
        c.noise.alpha = require_number(jn, "alpha");
        c.noise.p = require_number(jn, "p");
    } else if (c.noise.kind == "two_point") {
        c.noise.magnitude = require_number(jn, "magnitude");
        c.noise.prob = require_number(jn, "prob");
        c.noise.p = require_number(jn, "p");
    } else {
        throw ConfigError("config field 'noise.kind' must be gaussian, pareto_sphere or two_point");
    }

    if (!j.contains("T") || !j["T"].is_array() || j["T"].empty())
        throw ConfigError("config field 'T' must be a non-empty array of integers");
    for (const auto& e : j["T"]) {
        if (!e.is_number_integer() || e.get<long>() < 2)
            throw ConfigError("config field 'T' entries must be integers >= 2");
        c.T_list.push_back(e.get<long>());
    }
    if (!std::is_sorted(c.T_list.begin(), c.T_list.end()))
        throw ConfigError("config field 'T' must be sorted ascending");

    c.delta = require_number(j, "delta");
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("config field 'delta' must lie in (0,1)");

    double M = require_number(j, "M");
    if (M < 1 || M != std::floor(M)) throw ConfigError("config field 'M' must be a positive integer");
    c.M = static_cast<int>(M);

    if (j.contains("base_seed")) {
        const auto& js = j["base_seed"];
        if (js.is_number_unsigned())
            c.base_seed = js.get<std::uint64_t>();
        else if (js.is_number_integer() && js.get<std::int64_t>() >= 0)
            c.base_seed = static_cast<std::uint64_t>(js.get<std::int64_t>());
        else
            throw ConfigError("config field 'base_seed' must be a non-negative integer");
    }

    if (j.contains("R1")) {
        double r1 = require_number(j, "R1");
        if (!(r1 > 0.0)) throw ConfigError("config field 'R1' must be > 0");
        c.R1 = r1;
    }
    if (j.contains("x1")) {
        if (!j["x1"].is_array()) throw ConfigError("config field 'x1' must be an array");
        Point x1;
        for (const auto& e : j["x1"]) {
            if (!e.is_number()) throw ConfigError("config field 'x1' entries must be numbers");
            x1.push_back(e.get<double>());
        }
        if (static_cast<int>(x1.size()) != c.objective.dim)
            throw ConfigError("config field 'x1' length must equal objective.dim");
        c.x1 = std::move(x1);
    }
    if (c.regime == Regime::convex && !c.R1 && !c.x1)
        throw ConfigError("convex configs need 'R1' (or an explicit 'x1')");
    if (c.regime != Regime::convex && !c.x1)
        throw ConfigError("nonconvex/manual configs need an explicit 'x1'");

    if (j.contains("schedule")) {
        const json& js = j["schedule"];
        if (!js.is_object()) throw ConfigError("config field 'schedule' must be an object");
        if (js.contains("eta")) c.schedule.eta = require_number(js, "eta");
        if (js.contains("lambda")) c.schedule.lambda = require_number(js, "lambda");
        if (js.contains("p")) c.schedule.p = require_number(js, "p");
        if (js.contains("sigma")) c.schedule.sigma = require_number(js, "sigma");
        if (c.schedule.eta.has_value() != c.schedule.lambda.has_value())
            throw ConfigError("config field 'schedule' must set eta and lambda together");
        if (c.schedule.p && !(*c.schedule.p > 1.0 && *c.schedule.p <= 2.0))
            throw ConfigError("config field 'schedule.p' must lie in (1, 2]");
        if (c.schedule.sigma && !(*c.schedule.sigma >= 0.0))
            throw ConfigError("config field 'schedule.sigma' must be >= 0");
    }

    if (!j.contains("checks") || !j["checks"].is_array())
        throw ConfigError("config field 'checks' must be an array");
    for (const auto& e : j["checks"]) {
        if (!e.is_string()) throw ConfigError("config field 'checks' entries must be strings");
        std::string name = e.get<std::string>();
        if (!known_checks().count(name))
            throw ConfigError("config field 'checks' has unknown check '" + name + "'");
        c.checks.insert(name);
    }
    if (c.checks.count("rate") && c.T_list.size() < 4)
        throw ConfigError("the 'rate' check needs at least 4 values of T");

    if (j.contains("out_dir")) c.out_dir = require_string(j, "out_dir");
    if (j.contains("emit_trials")) {
        if (!j["emit_trials"].is_boolean()) throw ConfigError("config field 'emit_trials' must be a boolean");
        c.emit_trials = j["emit_trials"].get<bool>();
    }
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["regime"] = regime_name(c.regime);
    j["objective"]["name"] = c.objective.name;
    j["objective"]["dim"] = c.objective.dim;
    for (const auto& [k, v] : c.objective.params) j["objective"]["params"][k] = v;
    j["noise"]["kind"] = c.noise.kind;
    if (c.noise.kind == "gaussian") {
        j["noise"]["sigma"] = c.noise.sigma;
    } else if (c.noise.kind == "pareto_sphere") {
        j["noise"]["sigma"] = c.noise.sigma;
        j["noise"]["alpha"] = c.noise.alpha;
        j["noise"]["p"] = c.noise.p;
    } else {
        j["noise"]["magnitude"] = c.noise.magnitude;
        j["noise"]["prob"] = c.noise.prob;
        j["noise"]["p"] = c.noise.p;
    }
    j["T"] = c.T_list;
    j["delta"] = c.delta;
    j["M"] = c.M;
    j["base_seed"] = c.base_seed;
    if (c.R1) j["R1"] = *c.R1;
    if (c.x1) j["x1"] = *c.x1;
    if (c.schedule.eta) j["schedule"]["eta"] = *c.schedule.eta;
    if (c.schedule.lambda) j["schedule"]["lambda"] = *c.schedule.lambda;
    if (c.schedule.p) j["schedule"]["p"] = *c.schedule.p;
    if (c.schedule.sigma) j["schedule"]["sigma"] = *c.schedule.sigma;
    j["checks"] = c.checks;
    j["out_dir"] = c.out_dir;
    j["emit_trials"] = c.emit_trials;
    return j;
}

Objective make_objective(const ObjectiveSpec& spec) {
    try {
        return builtin_objective(spec.name, spec.dim, spec.params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("objective: ") + e.what());
    }
}

NoiseModel make_noise(const NoiseSpec& spec, int dim) {
    try {
        if (spec.kind == "gaussian") return NoiseModel::gaussian(dim, spec.sigma);
        if (spec.kind == "pareto_sphere")
            return NoiseModel::pareto_sphere(dim, spec.alpha, spec.p, spec.sigma);
        return NoiseModel::two_point(dim, spec.magnitude, spec.prob, spec.p);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("noise: ") + e.what());
    }
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string run_dir_name(const std::string& config_bytes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "run-%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_bytes)));
    return std::string(buf);
}

}  // namespace heavyclip
