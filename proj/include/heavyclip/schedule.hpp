#pragma once

#include <array>
#include <string>

namespace heavyclip {

enum class Regime { convex, nonconvex, manual };

std::string regime_name(Regime r);
Regime regime_from_name(const std::string& s);

struct ScheduleInputs {
    long T = 0;
    double delta = 0.0;
    double sigma = 0.0;
    double p = 2.0;
    double L = 0.0;
    double radius_or_gap = 0.0;  // R1 for convex, Delta1 for nonconvex
};

// Constant step size and clipping level. The convex choice guarantees
// eta <= 1/(4L); the nonconvex choice guarantees eta <= 1/L and the four
// parameter-property inequalities.
struct Schedule {
    double eta = 0.0;
    double lambda = 0.0;
    Regime regime = Regime::manual;
    ScheduleInputs inputs;
};

// lambda = max{(16T)^{1/p} sigma, sqrt(2) L R1}, eta = R1 / (16 lambda ln(4T/delta))
Schedule schedule_convex(long T, double delta, double sigma, double p, double L, double R1);

// lambda = max of the three terms
//   (8 ln(4T/delta)/sqrt(L Delta1))^{1/(p-1)} T^{1/(3p-2)} sigma^{p/(p-1)}
//   4 sqrt(L Delta1)
//   32^{1/p} sigma T^{1/(3p-2)}
// eta = sqrt(Delta1) T^{(1-p)/(3p-2)} / (8 lambda sqrt(L) ln(4T/delta))
Schedule schedule_nonconvex(long T, double delta, double sigma, double p, double L,
                            double Delta1);

Schedule schedule_manual(double eta, double lambda, const ScheduleInputs& inputs);

struct ParameterPropertyReport {
    struct Entry {
        std::string name;
        double lhs = 0.0;
        double rhs = 0.0;
        double slack = 0.0;  // rhs - lhs
        bool pass = false;
    };
    std::array<Entry, 4> checks;
    bool all_pass = false;
};

// The four inequalities the nonconvex parameters satisfy:
//   (1/L)(sigma/lambda)^p <= eta
//   eta <= 1/L
//   (sigma/lambda)^p T^{p/(3p-2)} <= 1/32
//   T L (sigma/lambda)^p lambda^2 eta^2 <= Delta1/2048
// Failures are reported, not thrown. Accepts nonconvex and manual schedules.
ParameterPropertyReport check_parameter_properties(const Schedule& s);

}  // namespace heavyclip
