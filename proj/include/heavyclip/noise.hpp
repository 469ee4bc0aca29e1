#pragma once

#include <optional>
#include <span>
#include <string>

#include "heavyclip/rng.hpp"
#include "heavyclip/vec.hpp"

namespace heavyclip {

// Zero-mean gradient noise with an analytically certified p-th moment:
// E||xi||^p equals certified sigma^p in closed form for every variant.
//
//   gaussian      per-coordinate std sigma/sqrt(d), so E||xi||^2 = sigma^2 (p = 2)
//   pareto_sphere xi = s * r * u, u uniform on the unit sphere, r Pareto(alpha, 1),
//                 s = sigma*((alpha-p)/alpha)^{1/p}; infinite variance for alpha <= 2
//   two_point     xi = +/- M e1 with probability q/2 each, else 0; sigma^p = q M^p
class NoiseModel {
public:
    enum class Kind { gaussian, pareto_sphere, two_point };

    static NoiseModel gaussian(int dim, double sigma);
    static NoiseModel pareto_sphere(int dim, double alpha, double p, double sigma);
    static NoiseModel two_point(int dim, double magnitude, double prob, double p);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double sigma() const { return sigma_; }
    double p() const { return p_; }
    double alpha() const { return alpha_; }
    double pareto_scale() const { return scale_; }
    double magnitude() const { return magnitude_; }
    double prob() const { return prob_; }
    std::string kind_name() const;

    void sample_into(RngStream& rng, std::span<double> out) const;
    Point sample(RngStream& rng) const;

    struct Moment {
        double p;
        double sigma_p;  // exact E||xi||^p
    };
    Moment certified_moment() const;

    // True when E[clip(g + xi, lambda)] is computable exactly: two_point in any
    // dimension (3-atom enumeration), degenerate gaussian, or 1-d continuous
    // models through the quadrature oracle.
    bool has_exact_conditional_mean() const;

    // Cheap exact paths only (enumeration / degenerate); excludes per-call quadrature.
    bool has_cheap_conditional_mean() const;

    // E[clip(g + xi, lambda)] where supported, else nullopt.
    std::optional<Point> clipped_conditional_mean(std::span<const double> g, double lambda) const;

    // 1-d helpers used by the oracle. P[xi > y] in closed form.
    double tail_prob_above(double y) const;
    double density_1d(double x) const;

private:
    NoiseModel() = default;
    Kind kind_ = Kind::gaussian;
    int dim_ = 1;
    double sigma_ = 0.0;  // certified sigma
    double p_ = 2.0;      // certified p
    double alpha_ = 0.0;
    double scale_ = 0.0;  // pareto s
    double magnitude_ = 0.0;
    double prob_ = 0.0;
};

struct ClippedMoment {
    double mean_clipped = 0.0;    // E[clip(g + xi, lambda)]
    double bias = 0.0;            // E[clip] - g
    double u_second_moment = 0.0; // E[(clip - E[clip])^2]
};

// Exact conditional clipped moments for one-dimensional models, by adaptive
// quadrature (continuous variants) or exact enumeration (two_point).
// Throws std::runtime_error if the quadrature does not converge.
ClippedMoment clipped_moment_oracle_1d(const NoiseModel& model, double g, double lambda,
                                       double abs_tol = 1e-10);

}  // namespace heavyclip
