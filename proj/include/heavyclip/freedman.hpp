#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "heavyclip/noise.hpp"
#include "heavyclip/objective.hpp"
#include "heavyclip/rng.hpp"
#include "heavyclip/sgd.hpp"

namespace heavyclip {

// A bounded martingale difference sequence: |X_t| <= c almost surely, with the
// conditional variances sigma_t^2 = E[X_t^2 | past] available per path.
struct MdsSpec {
    std::string name;
    long T = 0;
    double c = 0.0;
    // fills x (the increments) and sig2 (conditional variances), both length T
    std::function<void(RngStream&, std::span<double>, std::span<double>)> sample_path;
};

// X_t = c * (+/-1 with equal probability); sigma_t^2 = c^2.
MdsSpec mds_rademacher(long T, double c);

// Replays <Z_t, theta_t^u> increments along a recorded trajectory: fresh
// two_point noise on the recorded gradients, exact conditional means by
// enumeration. coeff scales the increment (2 eta in the convex analysis,
// eta - L eta^2 in the nonconvex one). Z_t is the recorded x* - x_t (convex)
// or -grad f(x_t) (nonconvex); the ledger must carry full points.
MdsSpec mds_trajectory_replay(const Objective& obj, const TrajectoryLedger& led,
                              const NoiseModel& two_point_noise, double coeff, bool convex_z);

struct FreedmanReport {
    double empirical_prob = 0.0;
    double bound = 0.0;  // 2 exp(-b^2 / (2F + 2cb/3))
    double standard_error = 0.0;
    long trials = 0;
    long hits = 0;
    bool pass = false;
};

// Estimates Pr[|sum X_t| > b and sum sigma_t^2 <= F] over `trials` paths and
// checks it against the tail bound plus 4 standard errors. Aborts if any
// realized |X_t| exceeds c: the boundedness precondition is not negotiable.
FreedmanReport freedman_tail_check(const MdsSpec& spec, double b, double F, long trials,
                                   RngStream& rng);

// Exact two-sided tail of the scaled Rademacher sum: Pr[|sum_t c eps_t| > b].
double rademacher_tail_exact(long T, double c, double b);

}  // namespace heavyclip
