#pragma once

#include <cmath>
#include <queue>
#include <vector>

#include "heavyclip/kahan.hpp"

namespace heavyclip {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
    bool converged = false;
    int evals = 0;
};

namespace detail {

// Gauss-Kronrod 15(7) on [-1,1]. Layout: {node, gauss weight, kronrod weight};
// nodes with zero gauss weight are Kronrod-only.
inline constexpr double gk15[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529},
};

template <class F>
inline void gk15_panel(F& f, double a, double b, double& value, double& err, int& evals) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double y0 = f(mid);
    double g7 = gk15[0][1] * y0;
    double k15 = gk15[0][2] * y0;
    for (int i = 1; i < 8; ++i) {
        double dx = half * gk15[i][0];
        double yi = f(mid + dx) + f(mid - dx);
        g7 += gk15[i][1] * yi;
        k15 += gk15[i][2] * yi;
    }
    evals += 15;
    value = k15 * half;
    err = std::abs((k15 - g7) * half);
}

}  // namespace detail

// Adaptive Gauss-Kronrod to absolute tolerance, worst-interval-first.
// Never truncates silently: converged=false when the budget runs out.
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, double abs_tol,
                              int max_intervals = 4000) {
    struct Interval {
        double a, b, value, err;
        bool operator<(const Interval& o) const { return err < o.err; }
    };

    QuadResult res;
    if (a == b) {
        res.converged = true;
        return res;
    }

    std::priority_queue<Interval> q;
    Interval root{a, b, 0.0, 0.0};
    detail::gk15_panel(f, a, b, root.value, root.err, res.evals);
    q.push(root);
    double total_err = root.err;
    int n = 1;

    while (total_err > abs_tol && n < max_intervals) {
        Interval worst = q.top();
        q.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval at floating-point resolution; keep its estimate
            total_err -= worst.err;
            worst.err = 0.0;
            q.push(worst);
            continue;
        }
        Interval left{worst.a, mid, 0.0, 0.0}, right{mid, worst.b, 0.0, 0.0};
        detail::gk15_panel(f, left.a, left.b, left.value, left.err, res.evals);
        detail::gk15_panel(f, right.a, right.b, right.value, right.err, res.evals);
        total_err += left.err + right.err - worst.err;
        q.push(left);
        q.push(right);
        ++n;
    }

    KahanSum sum;
    while (!q.empty()) {
        sum.add(q.top().value);
        q.pop();
    }
    res.value = sum.value();
    res.abs_error = total_err;
    res.converged = total_err <= abs_tol;
    return res;
}

// Integrate over a piecewise panel list (breakpoints must be ascending).
// Tolerance is split evenly across panels.
template <class F>
QuadResult integrate_panels(F&& f, const std::vector<double>& breaks, double abs_tol,
                            int max_intervals_per_panel = 4000) {
    QuadResult total;
    total.converged = true;
    if (breaks.size() < 2) return total;
    double per_panel = abs_tol / static_cast<double>(breaks.size() - 1);
    KahanSum sum;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        QuadResult r = integrate_adaptive(f, breaks[i], breaks[i + 1], per_panel,
                                          max_intervals_per_panel);
        sum.add(r.value);
        total.abs_error += r.abs_error;
        total.evals += r.evals;
        total.converged = total.converged && r.converged;
    }
    total.value = sum.value();
    return total;
}

}  // namespace heavyclip
