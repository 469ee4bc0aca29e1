#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heavyclip/vec.hpp"

namespace heavyclip {

// Differentiable test function with exact analytic constants. The smoothness
// constant L, the lower bound f_star and (for the convex family) the
// minimizer x_star are known in closed form, never estimated.
struct Objective {
    std::string name;
    int dim = 0;
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient_into;
    double smoothness_L = 0.0;
    double f_star = 0.0;
    std::optional<Point> x_star;
    bool is_convex = false;

    Point gradient(const Point& x) const {
        Point g(x.size());
        gradient_into(x, g);
        return g;
    }
};

// Scalar parameters are broadcast to the objective dimension.
using ParamMap = std::map<std::string, std::vector<double>>;

// Families: quadratic, shifted-quadratic, smoothed-huber, nonconvex-sigmoid-well.
// Throws std::invalid_argument on unknown name or non-positive curvature/scale.
Objective builtin_objective(const std::string& name, int dim, const ParamMap& params = {});

struct SmoothnessReport {
    double max_violation = 0.0;  // max over samples of ||grad||^2 - 2L(f - f*)
    bool pass = true;
};

SmoothnessReport check_smoothness_bound(const Objective& obj, const std::vector<Point>& samples);

}  // namespace heavyclip
