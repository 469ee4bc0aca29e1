#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heavyclip/noise.hpp"
#include "heavyclip/objective.hpp"
#include "heavyclip/rng.hpp"
#include "heavyclip/schedule.hpp"

namespace heavyclip {

enum class LedgerDetail { scalars, full };

// When to compute the exact conditional mean of the clipped estimate each
// step. cheap_only uses enumeration/degenerate paths; force also allows the
// per-step quadrature oracle for 1-d continuous noise.
enum class DecompPolicy { off, cheap_only, force };

// Per-iteration record of every quantity the analysis manipulates. Index t
// runs 1..T; delta and r carry the terminal t = T+1 entry as well.
struct TrajectoryLedger {
    long T = 0;
    double eta = 0.0;     // first-step values when the schedule is sequenced
    double lambda = 0.0;
    double smoothness_L = 0.0;
    Regime regime = Regime::manual;
    bool constant_schedule = true;
    bool exact_conditional_mean = false;
    bool has_r = false;

    std::vector<double> delta;            // size T+1: f(x_t) - f*
    std::vector<double> r;                // size T+1: ||x_t - x*|| (convex only)
    std::vector<double> grad_norm_sq;     // size T
    std::vector<double> theta_norm_sq;    // size T
    std::vector<double> theta_dot_to_opt; // size T: <theta_t, x_t - x*> (convex only)
    std::vector<double> theta_u_norm_sq;  // size T when decomposition available
    std::vector<double> theta_b_norm_sq;  // size T when decomposition available
    std::vector<double> grad_dot_theta_u; // size T when decomposition available
    std::vector<std::uint8_t> clipped;    // size T: 1 when ||ghat|| > lambda
    double theta_u_norm_max = 0.0;
    std::vector<Point> points;            // size T+1 in full detail mode

    double metric_convex() const;     // (1/T) sum_t delta_t, t = 1..T
    double metric_nonconvex() const;  // (1/T) sum_t ||grad f(x_t)||^2
    std::string to_csv() const;
};

// Algorithm: ghat_t = grad f(x_t) + xi_t; gtilde_t = clip(ghat_t, lambda);
// x_{t+1} = x_t - eta gtilde_t. Aborts with the offending t on a non-finite
// iterate.
TrajectoryLedger run_clipped_sgd(const Objective& obj, const NoiseModel& noise,
                                 const Schedule& s, long T, const Point& x1, RngStream& rng,
                                 LedgerDetail detail = LedgerDetail::scalars,
                                 DecompPolicy decomp = DecompPolicy::cheap_only);

// Baseline: the same update with the identity clip (lambda = +infinity).
TrajectoryLedger run_vanilla_sgd(const Objective& obj, const NoiseModel& noise, double eta,
                                 long T, const Point& x1, RngStream& rng,
                                 LedgerDetail detail = LedgerDetail::scalars);

// Per-step step sizes and clipping levels (both length T): the algorithm's
// general sequenced form for experimentation, no convergence claims attached.
// The per-step and event checkers refuse the resulting ledgers.
TrajectoryLedger run_clipped_sgd_sequenced(const Objective& obj, const NoiseModel& noise,
                                           std::span<const double> etas,
                                           std::span<const double> lambdas, const Point& x1,
                                           RngStream& rng,
                                           LedgerDetail detail = LedgerDetail::scalars,
                                           DecompPolicy decomp = DecompPolicy::cheap_only);

// Deterministic starting point: x* + R1 * e1, so the R1 fed to the schedule
// is exact in floating point.
Point convex_start(const Objective& obj, double R1);

struct StepCheckReport {
    long checked = 0;
    long violations = 0;
    long first_violation_t = -1;
    double max_residual = 0.0;  // max over t of lhs - rhs (negative when slack)
    bool pass = false;
};

// Per-step convex inequality, pointwise along the recorded trajectory:
//   eta Delta_t <= R_t^2 - R_{t+1}^2 + 2 eta^2 ||theta_t||^2
//                  - 2 eta <theta_t, x_t - x*> + 1e-9 max(1, R_t^2)
StepCheckReport check_convex_per_step(const TrajectoryLedger& led);

// Per-step non-convex inequality (requires the exact decomposition):
//   (eta/2)||grad f(x_t)||^2 <= Delta_t - Delta_{t+1} + L eta^2 ||theta_u||^2
//       + (L eta^2 - eta) <grad f(x_t), theta_u> + (3 eta/2)||theta_b||^2
//       + 1e-9 max(1, Delta_t)
StepCheckReport check_nonconvex_per_step(const TrajectoryLedger& led);

}  // namespace heavyclip
