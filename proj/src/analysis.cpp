#include "heavyclip/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "heavyclip/kahan.hpp"
#include "heavyclip/parallel.hpp"

namespace heavyclip {

std::vector<TrialSummary> run_ensemble(const EnsembleSpec& spec, int threads) {
    if (spec.M < 1) throw std::invalid_argument("run_ensemble: M must be >= 1");
    if (!spec.obj || !spec.noise) throw std::invalid_argument("run_ensemble: missing objective/noise");
    std::vector<TrialSummary> out(spec.M);

    parallel_for(spec.M, threads, [&](long i) {
        RngStream rng(spec.base_seed, static_cast<std::uint64_t>(i) + 1);
        TrajectoryLedger led;
        try {
            led = run_clipped_sgd(*spec.obj, *spec.noise, spec.schedule, spec.T, spec.x1, rng,
                                  LedgerDetail::scalars, spec.decomp);
        } catch (const std::exception& e) {
            throw std::runtime_error("trial " + std::to_string(i + 1) + ": " + e.what());
        }
        TrialSummary& s = out[i];
        s.trial_index = static_cast<int>(i);
        s.metric = spec.analysis_regime == Regime::convex ? led.metric_convex()
                                                          : led.metric_nonconvex();
        s.theta_u_norm_max = led.theta_u_norm_max;
        if (spec.monitor_event) {
            EventMonitorResult ev = monitor_induction_event(
                led, spec.analysis_regime, spec.schedule,
                spec.analysis_regime == Regime::convex
                    ? spec.schedule.inputs.radius_or_gap * spec.schedule.inputs.radius_or_gap
                    : spec.schedule.inputs.radius_or_gap);
            s.event_held_through = ev.held_through;
            s.event_held_to_end = ev.held_to_end;
            s.event_available = true;
        }
        if (spec.run_per_step) {
            s.per_step = spec.analysis_regime == Regime::convex ? check_convex_per_step(led)
                                                                : check_nonconvex_per_step(led);
            s.per_step_available = true;
        }
        if (spec.trial_sink) spec.trial_sink(led, static_cast<int>(i));
    });
    return out;
}

double theorem_bound(Regime regime, long T, double delta, double sigma, double p, double L,
                     double radius_or_gap) {
    if (T < 2) throw std::invalid_argument("theorem_bound: T must be >= 2");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("theorem_bound: delta must lie in (0,1)");
    if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("theorem_bound: p must lie in (1, 2]");
    if (!(L > 0.0)) throw std::invalid_argument("theorem_bound: L must be > 0");
    if (!(radius_or_gap > 0.0)) throw std::invalid_argument("theorem_bound: R1/Delta1 must be > 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("theorem_bound: sigma must be >= 0");

    const double Td = static_cast<double>(T);
    const double log_term = std::log(4.0 * Td / delta);
    if (regime == Regime::convex) {
        const double R1 = radius_or_gap;
        double branch_noise =
            sigma > 0.0 ? std::pow(16.0, 1.0 / p) * std::pow(Td, (1.0 - p) / p) * sigma : 0.0;
        double branch_det = std::sqrt(2.0) * L * R1 / Td;
        return 32.0 * R1 * log_term * std::max(branch_noise, branch_det);
    }
    if (regime == Regime::nonconvex) {
        const double D1 = radius_or_gap;
        const double root_ld = std::sqrt(L * D1);
        const double e = 3.0 * p - 2.0;
        double b1 = 0.0, b3 = 0.0;
        if (sigma > 0.0) {
            b1 = std::pow(8.0 * log_term / root_ld, 1.0 / (p - 1.0)) *
                 std::pow(Td, (2.0 - 2.0 * p) / e) * std::pow(sigma, p / (p - 1.0));
            b3 = std::pow(32.0, 1.0 / p) * sigma * std::pow(Td, (2.0 - 2.0 * p) / e);
        }
        double b2 = 4.0 * root_ld * std::pow(Td, (1.0 - 2.0 * p) / e);
        return 32.0 * root_ld * log_term * std::max({b1, b2, b3});
    }
    throw std::invalid_argument("theorem_bound: regime must be convex or nonconvex");
}

namespace {

// robust ceil(q*M): immune to 0.9*100 = 90.0000000000000003
long quantile_rank(double q, int M) {
    double v = q * static_cast<double>(M);
    long r = static_cast<long>(std::ceil(v - 1e-9 * static_cast<double>(M)));
    return std::clamp<long>(r, 1, M);
}

}  // namespace

double empirical_quantile(std::vector<double> values, double delta) {
    if (values.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
    std::sort(values.begin(), values.end());
    long r = quantile_rank(1.0 - delta, static_cast<int>(values.size()));
    return values[r - 1];
}

BoundReport check_highprob_bound(const std::vector<double>& metrics, double delta,
                                 double bound) {
    if (metrics.empty()) throw std::invalid_argument("check_highprob_bound: empty ensemble");
    BoundReport rep;
    rep.M = static_cast<int>(metrics.size());
    rep.delta = delta;
    std::vector<double> sorted = metrics;
    std::sort(sorted.begin(), sorted.end());
    const double q = 1.0 - delta;
    long rank = quantile_rank(q, rep.M);
    rep.empirical_quantile = sorted[rank - 1];
    double se = 3.0 * std::sqrt(static_cast<double>(rep.M) * q * (1.0 - q));
    long lo = std::clamp<long>(rank - static_cast<long>(std::ceil(se)), 1, rep.M);
    long hi = std::clamp<long>(rank + static_cast<long>(std::ceil(se)), 1, rep.M);
    rep.quantile_ci_lo = sorted[lo - 1];
    rep.quantile_ci_hi = sorted[hi - 1];
    rep.theorem_bound = bound;
    rep.ratio = rep.empirical_quantile / bound;
    rep.pass = rep.empirical_quantile <= bound;
    return rep;
}

EventMonitorResult monitor_induction_event(const TrajectoryLedger& led, Regime regime,
                                           const Schedule& s, double budget) {
    if (!led.constant_schedule)
        throw std::invalid_argument(
            "monitor_induction_event: sequenced schedules carry no claims");
    EventMonitorResult res;
    res.budget = budget;
    const double eta = s.eta;
    KahanSum sum_theta_sq, sum_dot, sum_b_sq;
    // k = 1 has empty sums; the event holds there by definition.
    long held = 1;
    bool still_holding = true;
    double max_q = 0.0;

    if (regime == Regime::convex) {
        if (!led.has_r)
            throw std::invalid_argument("monitor_induction_event: convex monitor needs x*");
        for (long k = 2; k <= led.T + 1; ++k) {
            sum_theta_sq.add(led.theta_norm_sq[k - 2]);
            sum_dot.add(led.theta_dot_to_opt[k - 2]);
            double qk = 2.0 * eta * eta * sum_theta_sq.value() - 2.0 * eta * sum_dot.value();
            max_q = std::max(max_q, qk);
            if (still_holding && qk <= budget)
                held = k;
            else
                still_holding = false;
        }
    } else if (regime == Regime::nonconvex) {
        if (!led.exact_conditional_mean)
            throw std::invalid_argument(
                "monitor_induction_event: nonconvex monitor requires the exact theta "
                "decomposition (1-d-oracle or two_point noise); refusing to approximate");
        const double L = led.smoothness_L;
        for (long k = 2; k <= led.T + 1; ++k) {
            sum_theta_sq.add(led.theta_norm_sq[k - 2]);
            sum_dot.add(led.grad_dot_theta_u[k - 2]);
            sum_b_sq.add(led.theta_b_norm_sq[k - 2]);
            double qk = 0.5 * L * eta * eta * sum_theta_sq.value() +
                        (L * eta * eta - eta) * sum_dot.value() + 0.5 * eta * sum_b_sq.value();
            max_q = std::max(max_q, qk);
            if (still_holding && qk <= budget)
                held = k;
            else
                still_holding = false;
        }
    } else {
        throw std::invalid_argument("monitor_induction_event: regime must be convex or nonconvex");
    }
    res.held_through = held;
    res.held_to_end = held == led.T + 1;
    res.max_quantity = max_q;
    return res;
}

EventEnsembleReport summarize_event_fraction(const std::vector<TrialSummary>& trials,
                                             double delta) {
    EventEnsembleReport rep;
    rep.M = static_cast<int>(trials.size());
    long held = 0, avail = 0;
    for (const auto& t : trials) {
        if (!t.event_available) continue;
        ++avail;
        if (t.event_held_to_end) ++held;
    }
    if (avail == 0) throw std::invalid_argument("summarize_event_fraction: no monitored trials");
    rep.M = static_cast<int>(avail);
    rep.fraction_held = static_cast<double>(held) / static_cast<double>(avail);
    rep.threshold =
        1.0 - delta - 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(avail));
    rep.pass = rep.fraction_held >= rep.threshold;
    return rep;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& t_and_metric) {
    if (t_and_metric.size() < 4)
        throw std::invalid_argument("fit_rate: need at least 4 (T, metric) points");
    RateFit fit;
    KahanSum sx, sy, sxx, sxy, syy;
    const double n = static_cast<double>(t_and_metric.size());
    for (auto [T, m] : t_and_metric) {
        if (!(T > 0.0)) throw std::invalid_argument("fit_rate: T must be positive");
        double mm = m;
        if (mm <= 0.0) {
            mm = 1e-300;
            fit.floored = true;
        }
        double x = std::log(T), y = std::log(mm);
        sx.add(x);
        sy.add(y);
        sxx.add(x * x);
        sxy.add(x * y);
        syy.add(y * y);
    }
    double mx = sx.value() / n, my = sy.value() / n;
    double cov = sxy.value() / n - mx * my;
    double vx = sxx.value() / n - mx * mx;
    double vy = syy.value() / n - my * my;
    if (!(vx > 0.0)) throw std::invalid_argument("fit_rate: T values must be distinct");
    fit.slope = cov / vx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = vy > 0.0 ? (cov * cov) / (vx * vy) : 1.0;
    return fit;
}

double rate_exponent(Regime regime, double p) {
    if (regime == Regime::convex) return (1.0 - p) / p;
    if (regime == Regime::nonconvex) return (2.0 - 2.0 * p) / (3.0 * p - 2.0);
    throw std::invalid_argument("rate_exponent: regime must be convex or nonconvex");
}

}  // namespace heavyclip
