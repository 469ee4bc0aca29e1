#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "heavyclip/sgd.hpp"

namespace heavyclip {

// Everything the multi-trial statistics need from one trajectory; the full
// ledger is discarded after summarisation so ensembles stay small in memory.
struct TrialSummary {
    int trial_index = 0;
    double metric = 0.0;  // convex: (1/T) sum Delta_t; nonconvex: (1/T) sum ||grad||^2
    long event_held_through = 0;
    bool event_held_to_end = false;
    bool event_available = false;
    StepCheckReport per_step;
    bool per_step_available = false;
    double theta_u_norm_max = 0.0;
};

struct EnsembleSpec {
    const Objective* obj = nullptr;
    const NoiseModel* noise = nullptr;
    Schedule schedule;
    // which metric/event family to evaluate; matters when the schedule is manual
    Regime analysis_regime = Regime::convex;
    long T = 0;
    int M = 0;
    std::uint64_t base_seed = 0;
    Point x1;
    DecompPolicy decomp = DecompPolicy::cheap_only;
    bool monitor_event = false;
    bool run_per_step = false;
    // optional sink invoked once per finished trial (from worker threads)
    std::function<void(const TrajectoryLedger&, int)> trial_sink;
};

// M independent trials on streams (base_seed, 1..M); bit-deterministic for a
// given base_seed regardless of the thread count.
std::vector<TrialSummary> run_ensemble(const EnsembleSpec& spec, int threads = 1);

// Theorem RHS evaluated exactly as printed. radius_or_gap is R1 (convex) or
// Delta1 (nonconvex).
double theorem_bound(Regime regime, long T, double delta, double sigma, double p, double L,
                     double radius_or_gap);

// The ceil((1-delta) M)-th ascending order statistic.
double empirical_quantile(std::vector<double> values, double delta);

struct BoundReport {
    double empirical_quantile = 0.0;
    double theorem_bound = 0.0;
    double ratio = 0.0;
    double quantile_ci_lo = 0.0;  // order statistics at rank +/- 3 binomial SE
    double quantile_ci_hi = 0.0;
    int M = 0;
    double delta = 0.0;
    bool pass = false;
};

BoundReport check_highprob_bound(const std::vector<double>& metrics, double delta,
                                 double bound);

struct EventMonitorResult {
    long held_through = 0;  // largest N in 1..T+1 with the event true for all k <= N
    bool held_to_end = false;
    double max_quantity = 0.0;
    double budget = 0.0;
};

// Induction event along one trajectory. Convex: 2 eta^2 sum ||theta||^2 -
// 2 eta sum <theta, x_t - x*> <= R1^2. Nonconvex: (L eta^2/2) sum ||theta||^2
// + (L eta^2 - eta) sum <grad, theta_u> + (eta/2) sum ||theta_b||^2 <= Delta1,
// all sums over t = 1..k-1. Refuses a nonconvex ledger without the exact
// decomposition rather than approximating.
EventMonitorResult monitor_induction_event(const TrajectoryLedger& led, Regime regime,
                                           const Schedule& s, double budget);

struct EventEnsembleReport {
    double fraction_held = 0.0;
    double threshold = 0.0;  // 1 - delta - 3 sqrt(delta(1-delta)/M)
    int M = 0;
    bool pass = false;
};

EventEnsembleReport summarize_event_fraction(const std::vector<TrialSummary>& trials,
                                             double delta);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    bool floored = false;  // some metric was clamped at 1e-300 before log
};

// Least squares of log(metric) against log(T); needs >= 4 points.
RateFit fit_rate(const std::vector<std::pair<double, double>>& t_and_metric);

// Rate exponents the fits are compared against.
double rate_exponent(Regime regime, double p);

}  // namespace heavyclip
