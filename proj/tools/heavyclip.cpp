#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "heavyclip/analysis.hpp"
#include "heavyclip/clipping.hpp"
#include "heavyclip/config.hpp"
#include "heavyclip/csv.hpp"
#include "heavyclip/freedman.hpp"
#include "heavyclip/runner.hpp"

using namespace heavyclip;
using nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json schedule_json(const Schedule& s) {
    json j;
    j["eta"] = s.eta;
    j["lambda"] = s.lambda;
    j["regime"] = regime_name(s.regime);
    j["inputs"]["T"] = s.inputs.T;
    j["inputs"]["delta"] = s.inputs.delta;
    j["inputs"]["sigma"] = s.inputs.sigma;
    j["inputs"]["p"] = s.inputs.p;
    j["inputs"]["L"] = s.inputs.L;
    j["inputs"][s.regime == Regime::convex ? "R1" : "Delta1"] = s.inputs.radius_or_gap;
    return j;
}

json parameter_property_json(const ParameterPropertyReport& rep) {
    json j;
    for (const auto& e : rep.checks) {
        json je;
        je["lhs"] = e.lhs;
        je["rhs"] = e.rhs;
        je["slack"] = e.slack;
        je["pass"] = e.pass;
        j["checks"][e.name] = je;
    }
    j["all_pass"] = rep.all_pass;
    return j;
}

int cmd_run(const std::string& config_path, int threads, const std::string& out_override,
            bool has_seed_override, std::uint64_t seed_override) {
    std::string raw;
    ExperimentConfig config;
    try {
        raw = slurp(config_path);
        json j = json::parse(raw, nullptr, true, true);
        config = parse_config(j);
        if (has_seed_override || !out_override.empty()) {
            if (has_seed_override) config.base_seed = seed_override;
            if (!out_override.empty()) config.out_dir = out_override;
            // overrides change the effective experiment; hash the updated form
            raw = config_to_json(config).dump(2);
        }
    } catch (const json::parse_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    try {
        RunOutcome out = run_experiment(config, raw, threads);
        std::cout << "run directory: " << out.run_dir << "\n";
        for (const auto& f : out.failed_checks) std::cerr << "check failed: " << f << "\n";
        return out.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "run error: " << e.what() << "\n";
        return kExitCheckFailure;
    }
}

int cmd_schedule(const std::string& regime, long T, double delta, double sigma, double p,
                 double L, double scale) {
    json out;
    try {
        if (regime == "convex") {
            Schedule s = schedule_convex(T, delta, sigma, p, L, scale);
            out["schedule"] = schedule_json(s);
            std::cout << out.dump(2) << "\n";
            return kExitPass;
        }
        if (regime == "nonconvex") {
            Schedule s = schedule_nonconvex(T, delta, sigma, p, L, scale);
            out["schedule"] = schedule_json(s);
            ParameterPropertyReport rep = check_parameter_properties(s);
            out["parameter_properties"] = parameter_property_json(rep);
            std::cout << out.dump(2) << "\n";
            return rep.all_pass ? kExitPass : kExitCheckFailure;
        }
        std::cerr << "schedule: --regime must be convex or nonconvex\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "schedule error: " << e.what() << "\n";
        return kExitUsage;
    }
}

NoiseModel builtin_verify_model(const std::string& name) {
    if (name == "gaussian") return NoiseModel::gaussian(1, 1.0);
    if (name == "pareto_sphere") return NoiseModel::pareto_sphere(1, 1.8, 1.5, 1.0);
    if (name == "two_point") return NoiseModel::two_point(1, 100.0, 1e-3, 1.5);
    if (name == "two_point_p2") return NoiseModel::two_point(1, 10.0, 1e-2, 2.0);
    throw ConfigError("unknown verify model '" + name +
                      "' (gaussian | pareto_sphere | two_point | two_point_p2)");
}

int cmd_verify_lemma2(const std::string& grid, const std::string& model_name, double grad_norm,
                      double lambda, std::uint64_t seed, const std::string& out_path) {
    try {
        RngStream rng(seed, 7);
        if (!grid.empty()) {
            if (grid != "default") {
                std::cerr << "verify lemma2: unknown grid '" << grid << "'\n";
                return kExitUsage;
            }
            // 3 models x 12 lambda points, grad at the lemma-tight lambda/2
            std::vector<double> lambdas;
            for (int k = 0; k < 12; ++k) lambdas.push_back(std::pow(2.0, k));
            std::vector<std::string> models{"gaussian", "pareto_sphere", "two_point"};
            std::ostringstream csv;
            csv << csv_version_header() << "\n";
            csv << "model,lambda,bias_norm,bias_bound,u_sq_moment,u_sq_bound,pass\n";
            bool all = true;
            for (const auto& mn : models) {
                NoiseModel model = builtin_verify_model(mn);
                auto rows = lemma2_sweep(model, lambdas, 100000, rng);
                for (const auto& r : rows) {
                    all = all && r.pass;
                    csv << mn << ',' << csv_num(r.lambda) << ',' << csv_num(r.bias_norm) << ','
                        << csv_num(r.bias_bound) << ',' << csv_num(r.u_sq_moment) << ','
                        << csv_num(r.u_sq_bound) << ',' << (r.pass ? 1 : 0) << "\n";
                }
            }
            if (out_path.empty()) {
                std::cout << csv.str();
            } else {
                std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
                out << csv.str();
                std::cout << "wrote " << out_path << "\n";
            }
            return all ? kExitPass : kExitCheckFailure;
        }
        NoiseModel model = builtin_verify_model(model_name);
        Lemma2Report rep = verify_lemma2(model, grad_norm, lambda, 100000, rng);
        json j;
        j["model"] = model_name;
        j["grad_norm"] = rep.grad_norm;
        j["lambda"] = rep.lambda;
        j["bias_norm"] = rep.bias_norm;
        j["bias_bound"] = rep.bias_bound;
        j["bias_bound_intermediate"] = rep.bias_bound_intermediate;
        j["u_sq_moment"] = rep.u_sq_moment;
        j["u_sq_bound"] = rep.u_sq_bound;
        j["u_norm_max"] = rep.u_norm_max;
        j["u_norm_bound"] = rep.u_norm_bound;
        j["exact"] = rep.exact;
        j["pass"] = rep.pass;
        std::cout << j.dump(2) << "\n";
        return rep.pass ? kExitPass : kExitCheckFailure;
    } catch (const std::invalid_argument& e) {
        // precondition refusals (e.g. grad_norm > lambda/2) are usage errors
        std::cerr << "verify lemma2: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "verify lemma2: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_verify_freedman(const std::string& spec_name, long T, double c, double b, double F,
                        long trials, std::uint64_t seed) {
    try {
        if (spec_name != "rademacher") {
            std::cerr << "verify freedman: unknown spec '" << spec_name << "'\n";
            return kExitUsage;
        }
        MdsSpec spec = mds_rademacher(T, c);
        RngStream rng(seed, 11);
        FreedmanReport rep = freedman_tail_check(spec, b, F, trials, rng);
        json j;
        j["spec"] = spec_name;
        j["T"] = T;
        j["c"] = c;
        j["b"] = b;
        j["F"] = F;
        j["trials"] = rep.trials;
        j["empirical_prob"] = rep.empirical_prob;
        j["bound"] = rep.bound;
        j["standard_error"] = rep.standard_error;
        j["exact_tail"] = rademacher_tail_exact(T, c, b);
        j["pass"] = rep.pass;
        std::cout << j.dump(2) << "\n";
        return rep.pass ? kExitPass : kExitCheckFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "verify freedman: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_rate(const std::string& summary_path, const std::string& regime_name_str, double p,
             double tolerance) {
    try {
        std::ifstream in(summary_path);
        if (!in) {
            std::cerr << "rate: cannot open '" << summary_path << "'\n";
            return kExitUsage;
        }
        std::vector<std::pair<double, double>> pts;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (line.rfind("regime,", 0) == 0) continue;
            std::istringstream ls(line);
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(ls, field, ',')) fields.push_back(field);
            if (fields.size() < 5 || fields[4].empty()) continue;
            pts.emplace_back(std::stod(fields[3]), std::stod(fields[4]));
        }
        RateFit fit = fit_rate(pts);
        Regime regime = regime_from_name(regime_name_str);
        double target = rate_exponent(regime, p);
        bool pass = std::abs(fit.slope - target) <= tolerance;
        json j;
        j["slope"] = fit.slope;
        j["intercept"] = fit.intercept;
        j["r_squared"] = fit.r_squared;
        j["target_exponent"] = target;
        j["tolerance"] = tolerance;
        j["points"] = pts.size();
        j["pass"] = pass;
        std::cout << j.dump(2) << "\n";
        return pass ? kExitPass : kExitCheckFailure;
    } catch (const std::exception& e) {
        std::cerr << "rate error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clipped-SGD under heavy-tailed noise: runs, schedules and verifiers"};
    app.require_subcommand(1);
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    app.add_option("--threads", threads, "worker threads (trial granularity)");

    auto* run = app.add_subcommand("run", "execute an experiment config");
    run->fallthrough();
    std::string config_path, run_out;
    std::uint64_t run_seed = 0;
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    auto* seed_opt = run->add_option("--seed", run_seed, "override the config base_seed");
    run->add_option("--out", run_out, "override the config out_dir");

    auto* sched = app.add_subcommand("schedule", "print the theorem schedule as JSON");
    sched->fallthrough();
    std::string regime;
    long T = 0;
    double delta = 0.1, sigma = 0.0, p = 2.0, L = 1.0, R1 = 0.0, Delta1 = 0.0;
    sched->add_option("--regime", regime)->required();
    sched->add_option("--T", T)->required();
    sched->add_option("--delta", delta)->required();
    sched->add_option("--sigma", sigma)->required();
    sched->add_option("--p", p)->required();
    sched->add_option("--L", L)->required();
    sched->add_option("--R1", R1);
    sched->add_option("--Delta1", Delta1);

    auto* verify = app.add_subcommand("verify", "builtin verification grids");
    auto* vlemma2 = verify->add_subcommand("lemma2", "clipped bias/variance bounds");
    std::string grid, model_name = "pareto_sphere", out_path;
    double grad_norm = 0.0, lambda = 1.0;
    std::uint64_t seed = 20240601;
    vlemma2->add_option("--grid", grid, "named sweep grid ('default': 3 models x 12 lambda)");
    vlemma2->add_option("--model", model_name);
    vlemma2->add_option("--grad-norm", grad_norm);
    vlemma2->add_option("--lambda", lambda);
    vlemma2->add_option("--seed", seed);
    vlemma2->add_option("--out", out_path, "write the sweep CSV here instead of stdout");

    auto* vfreed = verify->add_subcommand("freedman", "martingale tail bound check");
    std::string spec_name = "rademacher";
    long fT = 100, ftrials = 100000;
    double fc = 1.0, fb = 30.0, fF = 100.0;
    vfreed->add_option("--spec", spec_name);
    vfreed->add_option("--T", fT);
    vfreed->add_option("--c", fc);
    vfreed->add_option("--b", fb);
    vfreed->add_option("--F", fF);
    vfreed->add_option("--trials", ftrials);
    vfreed->add_option("--seed", seed);

    auto* rate = app.add_subcommand("rate", "fit the log-log convergence slope of a summary.csv");
    std::string summary_path, rate_regime = "convex";
    double rate_p = 2.0, rate_tol = 0.15;
    rate->add_option("--summary", summary_path)->required();
    rate->add_option("--regime", rate_regime);
    rate->add_option("--p", rate_p);
    rate->add_option("--tolerance", rate_tol);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (run->parsed())
        return cmd_run(config_path, threads, run_out, seed_opt->count() > 0, run_seed);
    if (sched->parsed()) {
        double scale = regime == "convex" ? R1 : Delta1;
        if (!(scale > 0.0)) {
            std::cerr << "schedule: supply --R1 (convex) or --Delta1 (nonconvex)\n";
            return kExitUsage;
        }
        return cmd_schedule(regime, T, delta, sigma, p, L, scale);
    }
    if (vlemma2->parsed()) return cmd_verify_lemma2(grid, model_name, grad_norm, lambda, seed, out_path);
    if (vfreed->parsed()) return cmd_verify_freedman(spec_name, fT, fc, fb, fF, ftrials, seed);
    if (rate->parsed()) return cmd_rate(summary_path, rate_regime, rate_p, rate_tol);
    return kExitUsage;
}
