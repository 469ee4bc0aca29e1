#include "heavyclip/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace heavyclip {

namespace {

std::vector<double> broadcast(const ParamMap& params, const std::string& key, int dim,
                              double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return std::vector<double>(dim, fallback);
    const auto& v = it->second;
    if (v.size() == 1) return std::vector<double>(dim, v[0]);
    if (static_cast<int>(v.size()) != dim)
        throw std::invalid_argument("objective parameter '" + key + "' has length " +
                                    std::to_string(v.size()) + ", expected 1 or " +
                                    std::to_string(dim));
    return v;
}

double scalar(const ParamMap& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    if (it->second.size() != 1)
        throw std::invalid_argument("objective parameter '" + key + "' must be a scalar");
    return it->second[0];
}

void require_positive(const std::vector<double>& a, const std::string& key) {
    for (double v : a)
        if (!(v > 0.0))
            throw std::invalid_argument("objective parameter '" + key + "' must be positive");
}

}  // namespace

Objective builtin_objective(const std::string& name, int dim, const ParamMap& params) {
    if (dim < 1) throw std::invalid_argument("objective dim must be >= 1");
    Objective obj;
    obj.name = name;
    obj.dim = dim;

    if (name == "quadratic") {
        auto a = broadcast(params, "a", dim, 1.0);
        require_positive(a, "a");
        obj.value = [a](std::span<const double> x) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += a[i] * x[i] * x[i];
            return 0.5 * s;
        };
        obj.gradient_into = [a](std::span<const double> x, std::span<double> g) {
            for (std::size_t i = 0; i < x.size(); ++i) g[i] = a[i] * x[i];
        };
        obj.smoothness_L = *std::max_element(a.begin(), a.end());
        obj.f_star = 0.0;
        obj.x_star = Point(dim, 0.0);
        obj.is_convex = true;
    } else if (name == "shifted-quadratic") {
        auto a = broadcast(params, "a", dim, 1.0);
        auto c = broadcast(params, "shift", dim, 0.0);
        double b = scalar(params, "offset", 0.0);
        require_positive(a, "a");
        obj.value = [a, c, b](std::span<const double> x) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                double d = x[i] - c[i];
                s += a[i] * d * d;
            }
            return 0.5 * s + b;
        };
        obj.gradient_into = [a, c](std::span<const double> x, std::span<double> g) {
            for (std::size_t i = 0; i < x.size(); ++i) g[i] = a[i] * (x[i] - c[i]);
        };
        obj.smoothness_L = *std::max_element(a.begin(), a.end());
        obj.f_star = b;
        obj.x_star = Point(c.begin(), c.end());
        obj.is_convex = true;
    } else if (name == "smoothed-huber") {
        // f(x) = sum a_i (sqrt(delta^2 + x_i^2) - delta): linear growth in the
        // tails, curvature a_i/delta at the bottom.
        auto a = broadcast(params, "a", dim, 1.0);
        double del = scalar(params, "delta", 1.0);
        require_positive(a, "a");
        if (!(del > 0.0)) throw std::invalid_argument("objective parameter 'delta' must be positive");
        obj.value = [a, del](std::span<const double> x) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                s += a[i] * (std::sqrt(del * del + x[i] * x[i]) - del);
            return s;
        };
        obj.gradient_into = [a, del](std::span<const double> x, std::span<double> g) {
            for (std::size_t i = 0; i < x.size(); ++i)
                g[i] = a[i] * x[i] / std::sqrt(del * del + x[i] * x[i]);
        };
        obj.smoothness_L = *std::max_element(a.begin(), a.end()) / del;
        obj.f_star = 0.0;
        obj.x_star = Point(dim, 0.0);
        obj.is_convex = true;
    } else if (name == "nonconvex-sigmoid-well") {
        // f(x) = sum a_i x_i^2/(1 + x_i^2): bounded, flat tails, non-convex.
        auto a = broadcast(params, "a", dim, 1.0);
        require_positive(a, "a");
        obj.value = [a](std::span<const double> x) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                double q = x[i] * x[i];
                s += a[i] * q / (1.0 + q);
            }
            return s;
        };
        obj.gradient_into = [a](std::span<const double> x, std::span<double> g) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                double d = 1.0 + x[i] * x[i];
                g[i] = 2.0 * a[i] * x[i] / (d * d);
            }
        };
        obj.smoothness_L = 2.0 * *std::max_element(a.begin(), a.end());
        obj.f_star = 0.0;
        obj.x_star = std::nullopt;
        obj.is_convex = false;
    } else {
        throw std::invalid_argument("unknown objective '" + name + "'");
    }
    return obj;
}

SmoothnessReport check_smoothness_bound(const Objective& obj, const std::vector<Point>& samples) {
    SmoothnessReport rep;
    rep.max_violation = -std::numeric_limits<double>::infinity();
    Point g(obj.dim);
    for (const auto& x : samples) {
        obj.gradient_into(x, g);
        double gap = obj.value(x) - obj.f_star;
        double violation = norm_sq(g) - 2.0 * obj.smoothness_L * gap;
        rep.max_violation = std::max(rep.max_violation, violation);
        double tol = 1e-9 * std::max(1.0, obj.smoothness_L * std::abs(gap));
        if (violation > tol) rep.pass = false;
    }
    if (samples.empty()) rep.max_violation = 0.0;
    return rep;
}

}  // namespace heavyclip
