#include "heavyclip/freedman.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "heavyclip/clipping.hpp"
#include "heavyclip/kahan.hpp"

namespace heavyclip {

MdsSpec mds_rademacher(long T, double c) {
    if (T < 1) throw std::invalid_argument("mds_rademacher: T must be >= 1");
    if (!(c > 0.0)) throw std::invalid_argument("mds_rademacher: c must be > 0");
    MdsSpec spec;
    spec.name = "rademacher";
    spec.T = T;
    spec.c = c;
    spec.sample_path = [c](RngStream& rng, std::span<double> x, std::span<double> sig2) {
        for (std::size_t t = 0; t < x.size(); ++t) {
            x[t] = (rng.next_u64() & 1u) ? c : -c;
            sig2[t] = c * c;
        }
    };
    return spec;
}

MdsSpec mds_trajectory_replay(const Objective& obj, const TrajectoryLedger& led,
                              const NoiseModel& noise, double coeff, bool convex_z) {
    if (noise.kind() != NoiseModel::Kind::two_point)
        throw std::invalid_argument("mds_trajectory_replay: needs two_point noise for exact "
                                    "conditional moments");
    if (led.points.size() < static_cast<std::size_t>(led.T))
        throw std::invalid_argument("mds_trajectory_replay: ledger lacks full points");
    if (convex_z && !obj.x_star)
        throw std::invalid_argument("mds_trajectory_replay: convex Z needs x*");

    // Precompute per-step scalars: the increment lives on coordinate 1 where
    // the two_point atoms act, X_t = coeff * z1_t * theta_u1.
    const double lambda = led.lambda;
    const double M = noise.magnitude();
    const double q = noise.prob();
    struct Step {
        double z1;          // first coordinate of Z_t
        double base, plus, minus;  // clip values of coordinate 1 for the 3 atoms
        double mean1;       // conditional mean of the clipped coordinate 1
        double var1;        // conditional variance of the clipped coordinate 1
    };
    std::vector<Step> steps(led.T);
    double zmax = 0.0;
    Point g(obj.dim);
    for (long t = 0; t < led.T; ++t) {
        const Point& x = led.points[t];
        obj.gradient_into(x, g);
        Step s{};
        s.z1 = convex_z ? ((*obj.x_star)[0] - x[0]) : -g[0];
        auto clip1 = [&](double shift) {
            Point gh = g;
            gh[0] += shift;
            double n = norm(gh);
            double c = n > lambda ? lambda / n : 1.0;
            return c * gh[0];
        };
        s.base = clip1(0.0);
        s.plus = clip1(M);
        s.minus = clip1(-M);
        s.mean1 = (1.0 - q) * s.base + 0.5 * q * (s.plus + s.minus);
        double v = (1.0 - q) * (s.base - s.mean1) * (s.base - s.mean1) +
                   0.5 * q * (s.plus - s.mean1) * (s.plus - s.mean1) +
                   0.5 * q * (s.minus - s.mean1) * (s.minus - s.mean1);
        s.var1 = v;
        steps[t] = s;
        zmax = std::max(zmax, std::abs(s.z1));
    }

    MdsSpec spec;
    spec.name = convex_z ? "trajectory-replay-convex" : "trajectory-replay-nonconvex";
    spec.T = led.T;
    spec.c = std::abs(coeff) * zmax * 2.0 * lambda;
    spec.sample_path = [steps = std::move(steps), coeff, q](RngStream& rng, std::span<double> x,
                                                            std::span<double> sig2) {
        for (std::size_t t = 0; t < x.size(); ++t) {
            const auto& s = steps[t];
            double u = rng.uniform01();
            double c1 = u < 0.5 * q ? s.plus : (u < q ? s.minus : s.base);
            x[t] = coeff * s.z1 * (c1 - s.mean1);
            sig2[t] = coeff * coeff * s.z1 * s.z1 * s.var1;
        }
    };
    return spec;
}

FreedmanReport freedman_tail_check(const MdsSpec& spec, double b, double F, long trials,
                                   RngStream& rng) {
    if (!(b > 0.0) || !(F > 0.0))
        throw std::invalid_argument("freedman_tail_check: b and F must be > 0");
    if (trials < 1) throw std::invalid_argument("freedman_tail_check: trials must be >= 1");

    FreedmanReport rep;
    rep.trials = trials;
    rep.bound = 2.0 * std::exp(-b * b / (2.0 * F + 2.0 * spec.c * b / 3.0));

    std::vector<double> x(spec.T), sig2(spec.T);
    const double c_tol = spec.c * (1.0 + 1e-12);
    long hits = 0;
    for (long i = 0; i < trials; ++i) {
        RngStream path_rng = rng.substream(static_cast<std::uint64_t>(i) + 1);
        spec.sample_path(path_rng, x, sig2);
        KahanSum sx, sv;
        for (long t = 0; t < spec.T; ++t) {
            if (std::abs(x[t]) > c_tol)
                throw std::runtime_error(
                    "freedman_tail_check: |X_t| exceeded the declared bound c (spec '" +
                    spec.name + "'); the inequality's precondition is violated");
            sx.add(x[t]);
            sv.add(sig2[t]);
        }
        if (std::abs(sx.value()) > b && sv.value() <= F) ++hits;
    }
    rep.hits = hits;
    rep.empirical_prob = static_cast<double>(hits) / static_cast<double>(trials);
    rep.standard_error =
        std::sqrt(rep.empirical_prob * (1.0 - rep.empirical_prob) / static_cast<double>(trials));
    rep.pass = rep.empirical_prob <= rep.bound + 4.0 * rep.standard_error;
    return rep;
}

double rademacher_tail_exact(long T, double c, double b) {
    // sum_t c eps_t = c (2K - T) with K ~ Binomial(T, 1/2); for b > 0 the two
    // tails are disjoint, so the answer is twice the upper tail.
    if (!(b > 0.0)) return 1.0;
    double thr = b / c;
    long k_lo = static_cast<long>(std::floor((static_cast<double>(T) + thr) / 2.0)) + 1;
    if (k_lo > T) return 0.0;
    double log_half_T = static_cast<double>(T) * std::log(0.5);
    KahanSum tail;
    double log_choose = 0.0;  // log C(T, k), built incrementally from k = 0
    for (long k = 1; k <= T; ++k) {
        log_choose += std::log(static_cast<double>(T - k + 1)) - std::log(static_cast<double>(k));
        if (k >= k_lo) tail.add(std::exp(log_choose + log_half_T));
    }
    return std::min(1.0, 2.0 * tail.value());
}

}  // namespace heavyclip
