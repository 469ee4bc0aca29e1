#include "heavyclip/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace heavyclip {

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::convex: return "convex";
        case Regime::nonconvex: return "nonconvex";
        case Regime::manual: return "manual";
    }
    return "?";
}

Regime regime_from_name(const std::string& s) {
    if (s == "convex") return Regime::convex;
    if (s == "nonconvex") return Regime::nonconvex;
    if (s == "manual") return Regime::manual;
    throw std::invalid_argument("unknown regime '" + s + "'");
}

namespace {

void validate_inputs(long T, double delta, double sigma, double p, double L, double scale,
                     const char* scale_name) {
    if (T < 2) throw std::invalid_argument("schedule: T must be >= 2");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("schedule: delta must lie in (0,1)");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("schedule: sigma must be finite and >= 0");
    if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("schedule: p must lie in (1, 2]");
    if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("schedule: L must be finite and > 0");
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw std::invalid_argument(std::string("schedule: ") + scale_name +
                                    " must be finite and > 0");
}

}  // namespace

Schedule schedule_convex(long T, double delta, double sigma, double p, double L, double R1) {
    validate_inputs(T, delta, sigma, p, L, R1, "R1");
    const double log_term = std::log(4.0 * static_cast<double>(T) / delta);
    const double lam_noise = sigma > 0.0 ? std::pow(16.0 * static_cast<double>(T), 1.0 / p) * sigma : 0.0;
    const double lam_det = std::sqrt(2.0) * L * R1;
    Schedule s;
    s.lambda = std::max(lam_noise, lam_det);
    s.eta = R1 / (16.0 * s.lambda * log_term);
    s.regime = Regime::convex;
    s.inputs = {T, delta, sigma, p, L, R1};
    return s;
}

Schedule schedule_nonconvex(long T, double delta, double sigma, double p, double L,
                            double Delta1) {
    validate_inputs(T, delta, sigma, p, L, Delta1, "Delta1");
    const double Td = static_cast<double>(T);
    const double log_term = std::log(4.0 * Td / delta);
    const double t_pow = std::pow(Td, 1.0 / (3.0 * p - 2.0));
    const double root_ld = std::sqrt(L * Delta1);
    double term1 = 0.0, term3 = 0.0;
    if (sigma > 0.0) {
        term1 = std::pow(8.0 * log_term / root_ld, 1.0 / (p - 1.0)) * t_pow *
                std::pow(sigma, p / (p - 1.0));
        term3 = std::pow(32.0, 1.0 / p) * sigma * t_pow;
    }
    const double term2 = 4.0 * root_ld;
    Schedule s;
    s.lambda = std::max({term1, term2, term3});
    s.eta = std::sqrt(Delta1) * std::pow(Td, (1.0 - p) / (3.0 * p - 2.0)) /
            (8.0 * s.lambda * std::sqrt(L) * log_term);
    s.regime = Regime::nonconvex;
    s.inputs = {T, delta, sigma, p, L, Delta1};
    return s;
}

Schedule schedule_manual(double eta, double lambda, const ScheduleInputs& inputs) {
    if (!(eta > 0.0)) throw std::invalid_argument("schedule: eta must be > 0");
    if (!(lambda > 0.0)) throw std::invalid_argument("schedule: lambda must be > 0");
    Schedule s;
    s.eta = eta;
    s.lambda = lambda;
    s.regime = Regime::manual;
    s.inputs = inputs;
    return s;
}

ParameterPropertyReport check_parameter_properties(const Schedule& s) {
    if (s.regime == Regime::convex)
        throw std::invalid_argument(
            "check_parameter_properties applies to nonconvex (or manual) schedules");
    const auto& in = s.inputs;
    const double Td = static_cast<double>(in.T);
    const double ratio_p = std::pow(in.sigma / s.lambda, in.p);

    ParameterPropertyReport rep;
    auto set = [](ParameterPropertyReport::Entry& e, const std::string& name, double lhs,
                  double rhs) {
        e.name = name;
        e.lhs = lhs;
        e.rhs = rhs;
        e.slack = rhs - lhs;
        // terms can tie exactly in real arithmetic; allow rounding-level slack
        double tol = 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
        e.pass = lhs <= rhs + tol;
    };
    set(rep.checks[0], "inv_L_ratio_le_eta", ratio_p / in.L, s.eta);
    set(rep.checks[1], "eta_le_inv_L", s.eta, 1.0 / in.L);
    set(rep.checks[2], "ratio_T_pow_le_1_32",
        ratio_p * std::pow(Td, in.p / (3.0 * in.p - 2.0)), 1.0 / 32.0);
    set(rep.checks[3], "noise_drift_le_gap_2048",
        Td * in.L * ratio_p * s.lambda * s.lambda * s.eta * s.eta, in.radius_or_gap / 2048.0);
    rep.all_pass = true;
    for (const auto& e : rep.checks) rep.all_pass = rep.all_pass && e.pass;
    return rep;
}

}  // namespace heavyclip
