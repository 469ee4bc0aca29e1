#pragma once

#include <span>
#include <string>
#include <vector>

#include "heavyclip/noise.hpp"
#include "heavyclip/rng.hpp"
#include "heavyclip/vec.hpp"

namespace heavyclip {

// min{1, lambda/||g||} g. A zero gradient maps to zero (no-clipping branch).
Point clip(const Point& g, double lambda);
void clip_into(std::span<const double> g, double lambda, std::span<double> out);

// theta = theta_u + theta_b holds exactly by construction: theta_b is defined
// as theta - theta_u.
struct ClipDecomposition {
    Point theta;    // clipped estimate minus true gradient
    Point theta_u;  // clipped estimate minus its conditional mean
    Point theta_b;  // conditional bias
    bool exact_conditional_mean = false;
};

// Splits the clipped-gradient error against a conditional mean (oracle-exact
// when the noise admits one, Monte-Carlo otherwise; flag accordingly).
ClipDecomposition decompose_clip_error(const Point& grad_true, const Point& clipped,
                                       const Point& conditional_mean, bool exact);

struct Lemma2Report {
    double grad_norm = 0.0;
    double lambda = 0.0;
    double sigma = 0.0;
    double p = 0.0;
    double bias_norm = 0.0;
    double bias_bound = 0.0;              // 4 sigma^p lambda^{1-p}
    double bias_bound_intermediate = 0.0; // 2^p sigma^p lambda^{1-p}, informational
    double u_sq_moment = 0.0;
    double u_sq_bound = 0.0;              // 16 sigma^p lambda^{2-p}
    double u_norm_max = 0.0;
    double u_norm_bound = 0.0;            // 2 lambda
    double bias_se = 0.0;                 // zero on the exact oracle path
    double u_sq_se = 0.0;
    bool exact = false;
    bool pass = false;
};

// Checks the clipped-gradient bias/variance bounds at a single (||grad||, lambda)
// point. Requires grad_norm <= lambda/2. Uses the exact oracle (enumeration or
// quadrature) when available, otherwise n_mc Monte-Carlo samples with an
// inner/outer split and 4-standard-error slack.
Lemma2Report verify_lemma2(const NoiseModel& model, double grad_norm, double lambda,
                           long n_mc, RngStream& rng);

// Sweep over a lambda grid with grad_norm = lambda/2 at each point.
std::vector<Lemma2Report> lemma2_sweep(const NoiseModel& model,
                                       const std::vector<double>& lambdas, long n_mc,
                                       RngStream& rng);

// CSV table for a sweep: lambda, bias_norm, bias_bound, u_sq_moment, u_sq_bound, pass
std::string lemma2_sweep_csv(const std::vector<Lemma2Report>& rows);

}  // namespace heavyclip
