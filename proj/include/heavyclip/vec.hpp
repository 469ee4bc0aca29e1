#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace heavyclip {

// Dense real vector; the iterate x_t and everything shaped like it.
using Point = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_sq(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

inline bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

// y += c * x
inline void axpy(double c, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline Point operator-(const Point& a, const Point& b) {
    Point r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Point operator+(const Point& a, const Point& b) {
    Point r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Point scaled(const Point& a, double c) {
    Point r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
    return r;
}

}  // namespace heavyclip
