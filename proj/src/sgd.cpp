#include "heavyclip/sgd.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "heavyclip/clipping.hpp"
#include "heavyclip/csv.hpp"
#include "heavyclip/kahan.hpp"

namespace heavyclip {

double TrajectoryLedger::metric_convex() const {
    KahanSum s;
    for (long t = 0; t < T; ++t) s.add(delta[t]);
    return s.value() / static_cast<double>(T);
}

double TrajectoryLedger::metric_nonconvex() const {
    KahanSum s;
    for (long t = 0; t < T; ++t) s.add(grad_norm_sq[t]);
    return s.value() / static_cast<double>(T);
}

std::string TrajectoryLedger::to_csv() const {
    std::ostringstream os;
    os << csv_version_header() << "\n";
    os << "t,delta_t,r_t,grad_norm_sq,theta_norm_sq,clipped,"
          "cum_theta_norm_sq,cum_theta_dot_to_opt,cum_theta_u_norm_sq,"
          "cum_theta_b_norm_sq,cum_grad_dot_theta_u\n";
    KahanSum c_tn, c_td, c_un, c_bn, c_gu;
    for (long t = 0; t < T; ++t) {
        c_tn.add(theta_norm_sq[t]);
        if (has_r) c_td.add(theta_dot_to_opt[t]);
        if (exact_conditional_mean) {
            c_un.add(theta_u_norm_sq[t]);
            c_bn.add(theta_b_norm_sq[t]);
            c_gu.add(grad_dot_theta_u[t]);
        }
        os << (t + 1) << ',' << csv_num(delta[t]) << ',';
        if (has_r) os << csv_num(r[t]);
        os << ',' << csv_num(grad_norm_sq[t]) << ',' << csv_num(theta_norm_sq[t]) << ','
           << int(clipped[t]) << ',' << csv_num(c_tn.value()) << ',';
        if (has_r) os << csv_num(c_td.value());
        os << ',';
        if (exact_conditional_mean)
            os << csv_num(c_un.value()) << ',' << csv_num(c_bn.value()) << ','
               << csv_num(c_gu.value());
        else
            os << ",,";
        os << "\n";
    }
    return os.str();
}

Point convex_start(const Objective& obj, double R1) {
    if (!obj.x_star) throw std::invalid_argument("convex_start: objective has no known minimizer");
    Point x1 = *obj.x_star;
    x1[0] += R1;
    return x1;
}

namespace {

template <class EtaAt, class LambdaAt>
TrajectoryLedger run_clipped_sgd_impl(const Objective& obj, const NoiseModel& noise,
                                      EtaAt eta_at, LambdaAt lambda_at, long T,
                                      const Point& x1, RngStream& rng, LedgerDetail detail,
                                      DecompPolicy decomp, Regime regime, bool constant) {
    if (static_cast<int>(x1.size()) != obj.dim)
        throw std::invalid_argument("run_clipped_sgd: x1 dimension mismatch");
    if (noise.dim() != obj.dim)
        throw std::invalid_argument("run_clipped_sgd: noise dimension mismatch");
    if (T < 1) throw std::invalid_argument("run_clipped_sgd: T must be >= 1");

    const int d = obj.dim;
    const bool convex_tracking = obj.x_star.has_value();
    bool want_decomp = false;
    if (decomp == DecompPolicy::cheap_only)
        want_decomp = noise.has_cheap_conditional_mean();
    else if (decomp == DecompPolicy::force)
        want_decomp = noise.has_exact_conditional_mean();

    TrajectoryLedger led;
    led.T = T;
    led.eta = eta_at(0);
    led.lambda = lambda_at(0);
    led.smoothness_L = obj.smoothness_L;
    led.regime = regime;
    led.constant_schedule = constant;
    led.exact_conditional_mean = want_decomp;
    led.has_r = convex_tracking;
    led.delta.resize(T + 1);
    led.grad_norm_sq.resize(T);
    led.theta_norm_sq.resize(T);
    led.clipped.resize(T);
    if (convex_tracking) {
        led.r.resize(T + 1);
        led.theta_dot_to_opt.resize(T);
    }
    if (want_decomp) {
        led.theta_u_norm_sq.resize(T);
        led.theta_b_norm_sq.resize(T);
        led.grad_dot_theta_u.resize(T);
    }
    if (detail == LedgerDetail::full) led.points.reserve(T + 1);

    Point x = x1;
    Point g(d), xi(d), ghat(d), gtilde(d), theta(d), theta_u(d);
    const Point* xs = convex_tracking ? &*obj.x_star : nullptr;

    for (long t = 0; t < T; ++t) {
        const double eta = eta_at(t);
        const double lambda = lambda_at(t);
        if (!(eta > 0.0) || !(lambda > 0.0))
            throw std::invalid_argument("run_clipped_sgd: eta and lambda must be > 0 at t = " +
                                        std::to_string(t + 1));
        if (detail == LedgerDetail::full) led.points.push_back(x);
        obj.gradient_into(x, g);
        const double fval = obj.value(x);
        const double gap = fval - obj.f_star;
        const double gnsq = norm_sq(g);
        led.delta[t] = gap;
        led.grad_norm_sq[t] = gnsq;
        // smoothness consequence, checked live along every trajectory
        if (gnsq > 2.0 * obj.smoothness_L * gap + 1e-9 * std::max(1.0, obj.smoothness_L * gap))
            throw std::runtime_error("run_clipped_sgd: ||grad||^2 > 2L(f - f*) at t = " +
                                     std::to_string(t + 1) + " (objective violates smoothness)");
        if (convex_tracking) {
            double rsq = 0.0;
            for (int k = 0; k < d; ++k) {
                double dk = x[k] - (*xs)[k];
                rsq += dk * dk;
            }
            led.r[t] = std::sqrt(rsq);
        }

        noise.sample_into(rng, xi);
        for (int k = 0; k < d; ++k) ghat[k] = g[k] + xi[k];
        const double ghat_norm = norm(ghat);
        led.clipped[t] = ghat_norm > lambda ? 1 : 0;
        clip_into(ghat, lambda, gtilde);

        double tnsq = 0.0;
        for (int k = 0; k < d; ++k) {
            theta[k] = gtilde[k] - g[k];
            tnsq += theta[k] * theta[k];
        }
        led.theta_norm_sq[t] = tnsq;
        if (convex_tracking) {
            double dp = 0.0;
            for (int k = 0; k < d; ++k) dp += theta[k] * (x[k] - (*xs)[k]);
            led.theta_dot_to_opt[t] = dp;
        }
        if (want_decomp) {
            auto m = noise.clipped_conditional_mean(g, lambda);
            double unsq = 0.0, bnsq = 0.0, gu = 0.0;
            for (int k = 0; k < d; ++k) {
                theta_u[k] = gtilde[k] - (*m)[k];
                double tb = theta[k] - theta_u[k];  // theta_u + theta_b == theta exactly
                unsq += theta_u[k] * theta_u[k];
                bnsq += tb * tb;
                gu += g[k] * theta_u[k];
            }
            led.theta_u_norm_sq[t] = unsq;
            led.theta_b_norm_sq[t] = bnsq;
            led.grad_dot_theta_u[t] = gu;
            led.theta_u_norm_max = std::max(led.theta_u_norm_max, std::sqrt(unsq));
        }

        for (int k = 0; k < d; ++k) x[k] -= eta * gtilde[k];
        if (!all_finite(x))
            throw std::runtime_error("run_clipped_sgd: non-finite iterate at t = " +
                                     std::to_string(t + 2));
    }

    led.delta[T] = obj.value(x) - obj.f_star;
    if (convex_tracking) {
        double rsq = 0.0;
        for (int k = 0; k < d; ++k) {
            double dk = x[k] - (*xs)[k];
            rsq += dk * dk;
        }
        led.r[T] = std::sqrt(rsq);
    }
    if (detail == LedgerDetail::full) led.points.push_back(x);
    return led;
}

}  // namespace

TrajectoryLedger run_clipped_sgd(const Objective& obj, const NoiseModel& noise,
                                 const Schedule& s, long T, const Point& x1, RngStream& rng,
                                 LedgerDetail detail, DecompPolicy decomp) {
    return run_clipped_sgd_impl(
        obj, noise, [&](long) { return s.eta; }, [&](long) { return s.lambda; }, T, x1, rng,
        detail, decomp, s.regime, /*constant=*/true);
}

TrajectoryLedger run_clipped_sgd_sequenced(const Objective& obj, const NoiseModel& noise,
                                           std::span<const double> etas,
                                           std::span<const double> lambdas, const Point& x1,
                                           RngStream& rng, LedgerDetail detail,
                                           DecompPolicy decomp) {
    if (etas.empty() || etas.size() != lambdas.size())
        throw std::invalid_argument(
            "run_clipped_sgd_sequenced: etas and lambdas must be non-empty and equal length");
    return run_clipped_sgd_impl(
        obj, noise, [&](long t) { return etas[t]; }, [&](long t) { return lambdas[t]; },
        static_cast<long>(etas.size()), x1, rng, detail, decomp, Regime::manual,
        /*constant=*/false);
}

TrajectoryLedger run_vanilla_sgd(const Objective& obj, const NoiseModel& noise, double eta,
                                 long T, const Point& x1, RngStream& rng, LedgerDetail detail) {
    ScheduleInputs in;
    in.T = T;
    in.L = obj.smoothness_L;
    Schedule s = schedule_manual(eta, std::numeric_limits<double>::infinity(), in);
    return run_clipped_sgd(obj, noise, s, T, x1, rng, detail, DecompPolicy::off);
}

StepCheckReport check_convex_per_step(const TrajectoryLedger& led) {
    if (!led.constant_schedule)
        throw std::invalid_argument("check_convex_per_step: sequenced schedules carry no claims");
    if (!led.has_r)
        throw std::invalid_argument("check_convex_per_step: ledger lacks distances to x*");
    StepCheckReport rep;
    rep.max_residual = -std::numeric_limits<double>::infinity();
    const double eta = led.eta;
    for (long t = 0; t < led.T; ++t) {
        double rsq = led.r[t] * led.r[t];
        double rsq_next = led.r[t + 1] * led.r[t + 1];
        double lhs = eta * led.delta[t];
        double rhs = rsq - rsq_next + 2.0 * eta * eta * led.theta_norm_sq[t] -
                     2.0 * eta * led.theta_dot_to_opt[t];
        double resid = lhs - rhs;
        rep.max_residual = std::max(rep.max_residual, resid);
        if (resid > 1e-9 * std::max(1.0, rsq)) {
            if (rep.violations == 0) rep.first_violation_t = t + 1;
            ++rep.violations;
        }
        ++rep.checked;
    }
    rep.pass = rep.violations == 0;
    return rep;
}

StepCheckReport check_nonconvex_per_step(const TrajectoryLedger& led) {
    if (!led.constant_schedule)
        throw std::invalid_argument(
            "check_nonconvex_per_step: sequenced schedules carry no claims");
    if (!led.exact_conditional_mean)
        throw std::invalid_argument(
            "check_nonconvex_per_step: ledger lacks the exact theta decomposition");
    StepCheckReport rep;
    rep.max_residual = -std::numeric_limits<double>::infinity();
    const double eta = led.eta;
    const double L = led.smoothness_L;
    for (long t = 0; t < led.T; ++t) {
        double lhs = 0.5 * eta * led.grad_norm_sq[t];
        double rhs = led.delta[t] - led.delta[t + 1] + L * eta * eta * led.theta_u_norm_sq[t] +
                     (L * eta * eta - eta) * led.grad_dot_theta_u[t] +
                     1.5 * eta * led.theta_b_norm_sq[t];
        double resid = lhs - rhs;
        rep.max_residual = std::max(rep.max_residual, resid);
        if (resid > 1e-9 * std::max(1.0, led.delta[t])) {
            if (rep.violations == 0) rep.first_violation_t = t + 1;
            ++rep.violations;
        }
        ++rep.checked;
    }
    rep.pass = rep.violations == 0;
    return rep;
}

}  // namespace heavyclip
