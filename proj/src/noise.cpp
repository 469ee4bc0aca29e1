#include "heavyclip/noise.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "heavyclip/clipping.hpp"
#include "heavyclip/quadrature.hpp"

namespace heavyclip {

NoiseModel NoiseModel::gaussian(int dim, double sigma) {
    if (dim < 1) throw std::invalid_argument("gaussian noise: dim must be >= 1");
    if (!(sigma >= 0.0)) throw std::invalid_argument("gaussian noise: sigma must be >= 0");
    NoiseModel m;
    m.kind_ = Kind::gaussian;
    m.dim_ = dim;
    m.sigma_ = sigma;
    m.p_ = 2.0;
    return m;
}

NoiseModel NoiseModel::pareto_sphere(int dim, double alpha, double p, double sigma) {
    if (dim < 1) throw std::invalid_argument("pareto_sphere noise: dim must be >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("pareto_sphere noise: sigma must be > 0");
    if (!(p > 1.0 && p <= 2.0))
        throw std::invalid_argument("pareto_sphere noise: p must lie in (1, 2]");
    if (!(alpha > 1.0))
        throw std::invalid_argument("pareto_sphere noise: alpha <= 1 leaves the mean undefined");
    if (!(alpha > p))
        throw std::invalid_argument("pareto_sphere noise: alpha <= p leaves the p-th moment unbounded");
    if (!(alpha <= 2.0))
        throw std::invalid_argument("pareto_sphere noise: alpha must lie in (p, 2]");
    NoiseModel m;
    m.kind_ = Kind::pareto_sphere;
    m.dim_ = dim;
    m.sigma_ = sigma;
    m.p_ = p;
    m.alpha_ = alpha;
    m.scale_ = sigma * std::pow((alpha - p) / alpha, 1.0 / p);
    return m;
}

NoiseModel NoiseModel::two_point(int dim, double magnitude, double prob, double p) {
    if (dim < 1) throw std::invalid_argument("two_point noise: dim must be >= 1");
    if (!(magnitude > 0.0)) throw std::invalid_argument("two_point noise: magnitude must be > 0");
    if (!(prob > 0.0 && prob <= 1.0))
        throw std::invalid_argument("two_point noise: prob must lie in (0, 1]");
    if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("two_point noise: p must lie in (1, 2]");
    NoiseModel m;
    m.kind_ = Kind::two_point;
    m.dim_ = dim;
    m.p_ = p;
    m.magnitude_ = magnitude;
    m.prob_ = prob;
    m.sigma_ = std::pow(prob * std::pow(magnitude, p), 1.0 / p);
    return m;
}

std::string NoiseModel::kind_name() const {
    switch (kind_) {
        case Kind::gaussian: return "gaussian";
        case Kind::pareto_sphere: return "pareto_sphere";
        case Kind::two_point: return "two_point";
    }
    return "?";
}

void NoiseModel::sample_into(RngStream& rng, std::span<double> out) const {
    switch (kind_) {
        case Kind::gaussian: {
            double s = sigma_ / std::sqrt(static_cast<double>(dim_));
            for (auto& v : out) v = s * rng.gaussian();
            return;
        }
        case Kind::pareto_sphere: {
            double n2 = 0.0;
            do {
                n2 = 0.0;
                for (auto& v : out) {
                    v = rng.gaussian();
                    n2 += v * v;
                }
            } while (n2 == 0.0);
            double r = rng.pareto(alpha_);
            double c = scale_ * r / std::sqrt(n2);
            for (auto& v : out) v *= c;
            return;
        }
        case Kind::two_point: {
            std::fill(out.begin(), out.end(), 0.0);
            double u = rng.uniform01();
            if (u < 0.5 * prob_)
                out[0] = magnitude_;
            else if (u < prob_)
                out[0] = -magnitude_;
            return;
        }
    }
}

Point NoiseModel::sample(RngStream& rng) const {
    Point xi(dim_);
    sample_into(rng, xi);
    return xi;
}

NoiseModel::Moment NoiseModel::certified_moment() const {
    switch (kind_) {
        case Kind::gaussian:
            return {2.0, sigma_ * sigma_};
        case Kind::pareto_sphere:
            // E r^p = alpha/(alpha-p) for Pareto(alpha, 1)
            return {p_, std::pow(scale_, p_) * alpha_ / (alpha_ - p_)};
        case Kind::two_point:
            return {p_, prob_ * std::pow(magnitude_, p_)};
    }
    return {p_, 0.0};
}

bool NoiseModel::has_cheap_conditional_mean() const {
    if (kind_ == Kind::two_point) return true;
    if (kind_ == Kind::gaussian && sigma_ == 0.0) return true;
    return false;
}

bool NoiseModel::has_exact_conditional_mean() const {
    if (has_cheap_conditional_mean()) return true;
    return dim_ == 1;  // continuous 1-d via the quadrature oracle
}

std::optional<Point> NoiseModel::clipped_conditional_mean(std::span<const double> g,
                                                          double lambda) const {
    if (kind_ == Kind::two_point) {
        Point base(g.begin(), g.end());
        Point plus = base, minus = base;
        plus[0] += magnitude_;
        minus[0] -= magnitude_;
        Point cb = clip(base, lambda);
        Point cp = clip(plus, lambda);
        Point cm = clip(minus, lambda);
        Point m(g.size());
        double wq = 0.5 * prob_;
        for (std::size_t i = 0; i < m.size(); ++i)
            m[i] = (1.0 - prob_) * cb[i] + wq * cp[i] + wq * cm[i];
        return m;
    }
    if (kind_ == Kind::gaussian && sigma_ == 0.0) {
        return clip(Point(g.begin(), g.end()), lambda);
    }
    if (dim_ == 1 && g.size() == 1) {
        ClippedMoment cm = clipped_moment_oracle_1d(*this, g[0], lambda);
        return Point{cm.mean_clipped};
    }
    return std::nullopt;
}

double NoiseModel::tail_prob_above(double y) const {
    switch (kind_) {
        case Kind::gaussian: {
            if (sigma_ == 0.0) return y < 0.0 ? 1.0 : 0.0;
            return 0.5 * std::erfc(y / (sigma_ * std::sqrt(2.0)));
        }
        case Kind::pareto_sphere: {
            if (y < 0.0) return 1.0 - tail_prob_above(-y);
            if (y < scale_) return 0.5;
            return 0.5 * std::pow(y / scale_, -alpha_);
        }
        case Kind::two_point: {
            double t = 0.0;
            if (y < magnitude_) t += 0.5 * prob_;
            if (y < 0.0) t += 1.0 - prob_;
            if (y < -magnitude_) t += 0.5 * prob_;
            return t;
        }
    }
    return 0.0;
}

double NoiseModel::density_1d(double x) const {
    switch (kind_) {
        case Kind::gaussian: {
            if (sigma_ == 0.0) return 0.0;
            double z = x / sigma_;
            return std::exp(-0.5 * z * z) / (sigma_ * std::sqrt(2.0 * 3.14159265358979323846));
        }
        case Kind::pareto_sphere: {
            double ax = std::abs(x);
            if (ax < scale_) return 0.0;
            return 0.5 * (alpha_ / scale_) * std::pow(ax / scale_, -alpha_ - 1.0);
        }
        case Kind::two_point:
            return 0.0;  // purely atomic
    }
    return 0.0;
}

namespace {

double clip_scalar(double y, double lambda) {
    if (y > lambda) return lambda;
    if (y < -lambda) return -lambda;
    return y;
}

// Breakpoints for integrating x -> h(g + x) f(x) dx over [lo, hi], with density
// support splits and geometric refinement for the Pareto power tail.
std::vector<double> oracle_breakpoints(const NoiseModel& model, double lo, double hi) {
    std::vector<double> pts;
    if (model.kind() == NoiseModel::Kind::gaussian) {
        // truncate where the density is zero to machine precision
        double r = 40.0 * model.sigma();
        lo = std::max(lo, -r);
        hi = std::min(hi, r);
        if (lo >= hi) return {};
        pts.push_back(lo);
        if (lo < 0.0 && hi > 0.0) pts.push_back(0.0);
        pts.push_back(hi);
        return pts;
    }
    // pareto_sphere: support |x| >= s with a density jump at +/- s
    double s = model.pareto_scale();
    auto add_side = [&](double a, double b) {
        // geometric panels from the support edge outward
        if (a >= b) return;
        pts.push_back(a);
        double edge = std::max(std::abs(a), std::abs(b));
        double start = std::min(std::abs(a), std::abs(b));
        for (double m = start * 2.0; m < edge; m *= 2.0) pts.push_back(a < 0.0 ? -m : m);
        pts.push_back(b);
    };
    if (hi > s) add_side(std::max(lo, s), hi);
    if (lo < -s) add_side(lo, std::min(hi, -s));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

double integrate_or_throw(const NoiseModel& model, double lo, double hi, double abs_tol,
                          const std::function<double(double)>& integrand) {
    auto breaks = oracle_breakpoints(model, lo, hi);
    if (breaks.size() < 2) return 0.0;
    QuadResult r = integrate_panels(integrand, breaks, abs_tol);
    if (!r.converged)
        throw std::runtime_error("clipped_moment_oracle_1d: quadrature did not converge (error " +
                                 std::to_string(r.abs_error) + " > tol)");
    return r.value;
}

}  // namespace

ClippedMoment clipped_moment_oracle_1d(const NoiseModel& model, double g, double lambda,
                                       double abs_tol) {
    if (!(lambda > 0.0)) throw std::invalid_argument("clipped_moment_oracle_1d: lambda must be > 0");
    if (model.kind() != NoiseModel::Kind::two_point && model.dim() != 1)
        throw std::invalid_argument("clipped_moment_oracle_1d: model must be one-dimensional");

    ClippedMoment out;

    if (model.kind() == NoiseModel::Kind::two_point) {
        const double q = model.prob();
        const double M = model.magnitude();
        const double atoms[3] = {g, g + M, g - M};
        const double w[3] = {1.0 - q, 0.5 * q, 0.5 * q};
        double mean = 0.0;
        for (int i = 0; i < 3; ++i) mean += w[i] * clip_scalar(atoms[i], lambda);
        double var = 0.0;
        for (int i = 0; i < 3; ++i) {
            double d = clip_scalar(atoms[i], lambda) - mean;
            var += w[i] * d * d;
        }
        out.mean_clipped = mean;
        out.bias = mean - g;
        out.u_second_moment = var;
        return out;
    }

    if (model.kind() == NoiseModel::Kind::gaussian && model.sigma() == 0.0) {
        out.mean_clipped = clip_scalar(g, lambda);
        out.bias = out.mean_clipped - g;
        out.u_second_moment = 0.0;
        return out;
    }

    // clip(g + x) saturates at +lambda for x >= hi and -lambda for x <= lo
    const double hi = lambda - g;
    const double lo = -lambda - g;
    const double p_hi = model.tail_prob_above(hi);
    const double p_lo = 1.0 - model.tail_prob_above(lo);

    double interior_mean = integrate_or_throw(
        model, lo, hi, abs_tol, [&](double x) { return (g + x) * model.density_1d(x); });
    double mean = lambda * p_hi - lambda * p_lo + interior_mean;

    double interior_var = integrate_or_throw(model, lo, hi, abs_tol, [&](double x) {
        double d = (g + x) - mean;
        return d * d * model.density_1d(x);
    });
    double dh = lambda - mean;
    double dl = -lambda - mean;
    double var = interior_var + dh * dh * p_hi + dl * dl * p_lo;

    out.mean_clipped = mean;
    out.bias = mean - g;
    out.u_second_moment = var;
    return out;
}

}  // namespace heavyclip
