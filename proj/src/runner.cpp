#include "heavyclip/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "heavyclip/analysis.hpp"
#include "heavyclip/clipping.hpp"
#include "heavyclip/csv.hpp"
#include "heavyclip/freedman.hpp"

namespace heavyclip {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << bytes;
}

json bound_report_json(const BoundReport& r) {
    json j;
    j["empirical_quantile"] = r.empirical_quantile;
    j["theorem_bound"] = r.theorem_bound;
    j["ratio"] = r.ratio;
    j["quantile_ci_lo"] = r.quantile_ci_lo;
    j["quantile_ci_hi"] = r.quantile_ci_hi;
    j["M"] = r.M;
    j["delta"] = r.delta;
    j["pass"] = r.pass;
    return j;
}

json lemma2_report_json(const Lemma2Report& r) {
    json j;
    j["grad_norm"] = r.grad_norm;
    j["lambda"] = r.lambda;
    j["bias_norm"] = r.bias_norm;
    j["bias_bound"] = r.bias_bound;
    j["bias_bound_intermediate"] = r.bias_bound_intermediate;
    j["u_sq_moment"] = r.u_sq_moment;
    j["u_sq_bound"] = r.u_sq_bound;
    j["u_norm_max"] = r.u_norm_max;
    j["u_norm_bound"] = r.u_norm_bound;
    j["exact"] = r.exact;
    j["pass"] = r.pass;
    return j;
}

std::string trial_file_name(int idx) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "trial_%04d.csv", idx);
    return std::string(buf);
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config, const std::string& raw_config_bytes,
                          int threads) {
    RunOutcome outcome;

    Objective obj = make_objective(config.objective);
    NoiseModel noise = make_noise(config.noise, config.objective.dim);

    if (config.regime == Regime::manual &&
        (config.checks.count("bound") || config.checks.count("event") ||
         config.checks.count("rate")))
        throw ConfigError("bound/event/rate checks need a convex or nonconvex regime");
    if (config.regime == Regime::convex && !obj.x_star)
        throw ConfigError("convex regime requires an objective with a known minimizer");
    if (config.regime == Regime::nonconvex &&
        (config.checks.count("event") || config.checks.count("per-step")) &&
        !noise.has_cheap_conditional_mean())
        throw ConfigError(
            "nonconvex event/per-step checks need exact conditional clipped means "
            "(two_point or degenerate noise); refusing to approximate");

    // (p, sigma) fed to the schedule formulas: the noise certification unless
    // explicitly overridden (e.g. sigma = 0 cells certified at a chosen p).
    auto mom = noise.certified_moment();
    const double sched_p = config.schedule.p.value_or(mom.p);
    const double sched_sigma =
        config.schedule.sigma.value_or(std::pow(mom.sigma_p, 1.0 / mom.p));

    Point x1;
    double radius_or_gap = 0.0;
    if (config.regime == Regime::convex) {
        if (config.x1) {
            if (!obj.x_star) throw ConfigError("convex run needs an objective with known x*");
            x1 = *config.x1;
            radius_or_gap = norm(x1 - *obj.x_star);
        } else {
            x1 = convex_start(obj, *config.R1);
            radius_or_gap = *config.R1;
        }
        if (!(radius_or_gap > 0.0)) throw ConfigError("convex run needs x1 != x*");
    } else {
        x1 = *config.x1;
        radius_or_gap = obj.value(x1) - obj.f_star;  // Delta1, exact at construction
        if (!(radius_or_gap > 0.0)) throw ConfigError("nonconvex run needs f(x1) > f*");
    }

    const fs::path run_dir = fs::path(config.out_dir) / run_dir_name(raw_config_bytes);
    fs::create_directories(run_dir / "reports");
    if (config.emit_trials) fs::create_directories(run_dir / "trials");
    outcome.run_dir = run_dir.string();

    write_file(run_dir / "config-echo.json", config_to_json(config).dump(2) + "\n");

    const bool want_event = config.checks.count("event") > 0;
    const bool want_per_step = config.checks.count("per-step") > 0;
    const bool want_bound = config.checks.count("bound") > 0;
    const bool want_rate = config.checks.count("rate") > 0;

    struct CellResult {
        long T;
        Schedule schedule;
        double quantile = std::nan("");
        double bound = std::nan("");
        double ratio = std::nan("");
        double event_fraction = std::nan("");
    };
    std::vector<CellResult> cells;
    std::vector<std::pair<double, double>> rate_points;

    for (long T : config.T_list) {
        Schedule sched;
        if (config.schedule.eta) {
            ScheduleInputs in{T, config.delta, sched_sigma, sched_p, obj.smoothness_L,
                              radius_or_gap};
            sched = schedule_manual(*config.schedule.eta, *config.schedule.lambda, in);
        } else if (config.regime == Regime::convex) {
            sched = schedule_convex(T, config.delta, sched_sigma, sched_p, obj.smoothness_L,
                                    radius_or_gap);
        } else if (config.regime == Regime::nonconvex) {
            sched = schedule_nonconvex(T, config.delta, sched_sigma, sched_p, obj.smoothness_L,
                                       radius_or_gap);
        } else {
            throw ConfigError("manual regime configs must supply schedule.eta and schedule.lambda");
        }

        EnsembleSpec spec;
        spec.obj = &obj;
        spec.noise = &noise;
        spec.schedule = sched;
        spec.analysis_regime = config.regime != Regime::manual ? config.regime
                               : obj.is_convex                 ? Regime::convex
                                                               : Regime::nonconvex;
        spec.T = T;
        spec.M = config.M;
        spec.base_seed = config.base_seed;
        spec.x1 = x1;
        spec.monitor_event = want_event;
        spec.run_per_step = want_per_step;

        fs::path trial_dir = run_dir / "trials" / ("T" + std::to_string(T));
        if (config.emit_trials) {
            fs::create_directories(trial_dir);
            spec.trial_sink = [&trial_dir](const TrajectoryLedger& led, int idx) {
                write_file(trial_dir / trial_file_name(idx), led.to_csv());
            };
        }

        std::vector<TrialSummary> trials = run_ensemble(spec, threads);
        std::vector<double> metrics(trials.size());
        for (std::size_t i = 0; i < trials.size(); ++i) metrics[i] = trials[i].metric;

        CellResult cell;
        cell.T = T;
        cell.schedule = sched;

        json cell_report;
        cell_report["T"] = T;
        cell_report["eta"] = sched.eta;
        cell_report["lambda"] = sched.lambda;
        cell_report["p"] = sched_p;
        cell_report["sigma"] = sched_sigma;

        if (want_bound) {
            double bound = theorem_bound(spec.analysis_regime, T, config.delta, sched_sigma,
                                         sched_p, obj.smoothness_L, radius_or_gap);
            BoundReport rep = check_highprob_bound(metrics, config.delta, bound);
            cell.quantile = rep.empirical_quantile;
            cell.bound = rep.theorem_bound;
            cell.ratio = rep.ratio;
            cell_report["bound"] = bound_report_json(rep);
            if (!rep.pass) outcome.failed_checks.push_back("bound (T=" + std::to_string(T) + ")");
            rate_points.emplace_back(static_cast<double>(T), rep.empirical_quantile);
        } else if (want_rate) {
            double q = empirical_quantile(metrics, config.delta);
            cell.quantile = q;
            rate_points.emplace_back(static_cast<double>(T), q);
        }

        if (want_event) {
            EventEnsembleReport rep = summarize_event_fraction(trials, config.delta);
            cell.event_fraction = rep.fraction_held;
            json je;
            je["fraction_held"] = rep.fraction_held;
            je["threshold"] = rep.threshold;
            je["M"] = rep.M;
            je["pass"] = rep.pass;
            cell_report["event"] = je;
            if (!rep.pass) outcome.failed_checks.push_back("event (T=" + std::to_string(T) + ")");
        }

        if (want_per_step) {
            long violations = 0, checked = 0;
            double max_resid = -std::numeric_limits<double>::infinity();
            for (const auto& t : trials) {
                violations += t.per_step.violations;
                checked += t.per_step.checked;
                max_resid = std::max(max_resid, t.per_step.max_residual);
            }
            json jp;
            jp["violations"] = violations;
            jp["checked"] = checked;
            jp["max_residual"] = max_resid;
            jp["pass"] = violations == 0;
            cell_report["per_step"] = jp;
            if (violations != 0)
                outcome.failed_checks.push_back("per-step (T=" + std::to_string(T) + ")");
        }

        if (config.checks.count("lemma2")) {
            // verify the bias/variance bounds at this cell's operating point
            RngStream rng(config.base_seed, 0xabcdef);
            Lemma2Report rep =
                verify_lemma2(noise, 0.5 * sched.lambda, sched.lambda, 100000, rng);
            cell_report["lemma2"] = lemma2_report_json(rep);
            if (!rep.pass)
                outcome.failed_checks.push_back("lemma2 (T=" + std::to_string(T) + ")");
        }

        write_file(run_dir / "reports" / ("cell_T" + std::to_string(T) + ".json"),
                   cell_report.dump(2) + "\n");
        cells.push_back(cell);
    }

    double slope = std::nan("");
    if (want_rate) {
        RateFit fit = fit_rate(rate_points);
        slope = fit.slope;
        double target = rate_exponent(config.regime, sched_p);
        double tol = config.regime == Regime::convex ? 0.15 : 0.20;
        bool pass = std::abs(fit.slope - target) <= tol;
        json jr;
        jr["slope"] = fit.slope;
        jr["intercept"] = fit.intercept;
        jr["r_squared"] = fit.r_squared;
        jr["target_exponent"] = target;
        jr["tolerance"] = tol;
        jr["pass"] = pass;
        write_file(run_dir / "reports" / "rate.json", jr.dump(2) + "\n");
        if (!pass) outcome.failed_checks.push_back("rate");
    }

    if (config.checks.count("freedman")) {
        MdsSpec spec = mds_rademacher(100, 1.0);
        RngStream rng(config.base_seed, 0xf3eed);
        FreedmanReport rep = freedman_tail_check(spec, 30.0, 100.0, 100000, rng);
        json jf;
        jf["empirical_prob"] = rep.empirical_prob;
        jf["bound"] = rep.bound;
        jf["standard_error"] = rep.standard_error;
        jf["trials"] = rep.trials;
        jf["pass"] = rep.pass;
        write_file(run_dir / "reports" / "freedman.json", jf.dump(2) + "\n");
        if (!rep.pass) outcome.failed_checks.push_back("freedman");
    }

    // roll-up table: one row per (regime, p, sigma, T)
    std::ostringstream csv;
    csv << csv_version_header() << "\n";
    csv << "regime,p,sigma,T,quantile,bound,ratio,event_fraction,slope\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        csv << regime_name(config.regime) << ',' << csv_num(sched_p) << ','
            << csv_num(sched_sigma) << ',' << c.T << ',';
        if (!std::isnan(c.quantile)) csv << csv_num(c.quantile);
        csv << ',';
        if (!std::isnan(c.bound)) csv << csv_num(c.bound);
        csv << ',';
        if (!std::isnan(c.ratio)) csv << csv_num(c.ratio);
        csv << ',';
        if (!std::isnan(c.event_fraction)) csv << csv_num(c.event_fraction);
        csv << ',';
        if (i + 1 == cells.size() && !std::isnan(slope)) csv << csv_num(slope);
        csv << "\n";
    }
    outcome.summary_csv = csv.str();
    write_file(run_dir / "summary.csv", outcome.summary_csv);

    outcome.exit_code = outcome.failed_checks.empty() ? 0 : 1;
    return outcome;
}

}  // namespace heavyclip
