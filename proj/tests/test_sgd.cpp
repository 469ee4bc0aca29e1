#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "heavyclip/clipping.hpp"
#include "heavyclip/sgd.hpp"

using namespace heavyclip;

TEST_SUITE("sgd") {

TEST_CASE("noiseless run is plain gradient descent") {
    Objective obj = builtin_objective("quadratic", 1, {{"a", {1.0}}});
    auto noise = NoiseModel::gaussian(1, 0.0);
    ScheduleInputs in{3, 0.1, 0.0, 2.0, 1.0, 1.0};
    Schedule s = schedule_manual(0.1, 10.0, in);
    RngStream rng(1, 1);
    auto led = run_clipped_sgd(obj, noise, s, 3, Point{1.0}, rng, LedgerDetail::full);
    CHECK(led.points[0][0] == doctest::Approx(1.0));
    CHECK(led.points[1][0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(led.points[2][0] == doctest::Approx(0.81).epsilon(1e-15));
    for (long t = 0; t < 3; ++t) CHECK(led.clipped[t] == 0);
}

TEST_CASE("first step under a tight clip moves by exactly eta lambda") {
    Objective obj = builtin_objective("quadratic", 2, {{"a", {2.0}}});
    auto noise = NoiseModel::gaussian(2, 0.0);
    ScheduleInputs in{1, 0.1, 0.0, 2.0, 2.0, 1.0};
    Schedule s = schedule_manual(0.25, 0.5, in);
    RngStream rng(1, 1);
    Point x1{3.0, 4.0};  // gradient (6, 8), norm 10 > lambda
    auto led = run_clipped_sgd(obj, noise, s, 1, x1, rng, LedgerDetail::full);
    CHECK(led.clipped[0] == 1);
    Point step = led.points[0] - led.points[1];
    CHECK(norm(step) == doctest::Approx(0.25 * 0.5).epsilon(1e-12));
    // direction is -grad / ||grad||
    CHECK(step[0] == doctest::Approx(0.125 * 0.6).epsilon(1e-12));
    CHECK(step[1] == doctest::Approx(0.125 * 0.8).epsilon(1e-12));
}

TEST_CASE("determinism: identical runs reproduce Delta_T bit-for-bit") {
    Objective obj = builtin_objective("quadratic", 1, {{"a", {1.0}}});
    auto noise = NoiseModel::two_point(1, 100.0, 1e-3, 1.5);
    Schedule s = schedule_convex(1000, 0.1, 1.0, 1.5, 1.0, 1.0);
    Point x1 = convex_start(obj, 1.0);
    RngStream r1(42, 3), r2(42, 3);
    auto led1 = run_clipped_sgd(obj, noise, s, 1000, x1, r1);
    auto led2 = run_clipped_sgd(obj, noise, s, 1000, x1, r2);
    REQUIRE(led1.delta[1000] == led2.delta[1000]);
    REQUIRE(led1.metric_convex() == led2.metric_convex());
}

TEST_CASE("vanilla equals clipped with an astronomically large lambda") {
    Objective obj = builtin_objective("quadratic", 1, {{"a", {1.0}}});
    auto noise = NoiseModel::pareto_sphere(1, 1.8, 1.5, 1.0);
    RngStream r1(9, 1), r2(9, 1);
    auto v = run_vanilla_sgd(obj, noise, 0.01, 500, Point{1.0}, r1);
    ScheduleInputs in{500, 0.1, 1.0, 1.5, 1.0, 1.0};
    Schedule s = schedule_manual(0.01, 1e300, in);
    auto c = run_clipped_sgd(obj, noise, s, 500, Point{1.0}, r2);
    REQUIRE(v.delta[500] == c.delta[500]);
    for (long t = 0; t < 500; ++t) REQUIRE(v.clipped[t] == 0);
}

TEST_CASE("noiseless vanilla run is exactly gradient descent") {
    Objective obj = builtin_objective("quadratic", 1, {{"a", {2.0}}});
    auto noise = NoiseModel::gaussian(1, 0.0);
    RngStream rng(3, 1);
    auto led = run_vanilla_sgd(obj, noise, 0.1, 10, Point{1.0}, rng, LedgerDetail::full);
    double x = 1.0;
    for (long t = 0; t <= 10; ++t) {
        REQUIRE(led.points[t][0] == doctest::Approx(x).epsilon(1e-15));
        x *= 1.0 - 0.1 * 2.0;
    }
}

TEST_CASE("vanilla and clipped diverge after the first clipped step") {
    Objective obj = builtin_objective("quadratic", 1, {{"a", {1.0}}});
    auto noise = NoiseModel::pareto_sphere(1, 1.8, 1.5, 1.0);
    double lambda = 3.0;
    RngStream r1(1234, 1), r2(1234, 1);
    ScheduleInputs in{2000, 0.1, 1.0, 1.5, 1.0, 1.0};
    Schedule s = schedule_manual(0.01, lambda, in);
    auto c = run_clipped_sgd(obj, noise, s, 2000, Point{1.0}, r1, LedgerDetail::full);
    auto v = run_vanilla_sgd(obj, noise, 0.01, 2000, Point{1.0}, r2, LedgerDetail::full);
    long first_clip = -1;
    for (long t = 0; t < 2000; ++t)
        if (c.clipped[t]) {
            first_clip = t;
            break;
        }
    REQUIRE(first_clip >= 0);
    for (long t = 0; t <= first_clip; ++t) REQUIRE(v.points[t][0] == c.points[t][0]);
    CHECK(v.points[first_clip + 1][0] != c.points[first_clip + 1][0]);
}

TEST_CASE("ledger records the exact decomposition with two_point noise") {
    Objective obj = builtin_objective("quadratic", 2, {{"a", {1.0, 0.5}}});
    auto noise = NoiseModel::two_point(2, 100.0, 0.01, 1.5);
    Schedule s = schedule_convex(200, 0.1, noise.sigma(), 1.5, 1.0, 1.0);
    Point x1 = convex_start(obj, 1.0);
    RngStream rng(7, 1);
    auto led = run_clipped_sgd(obj, noise, s, 200, x1, rng);
    REQUIRE(led.exact_conditional_mean);
    // the zero-mean part never exceeds twice the clipping level
    CHECK(led.theta_u_norm_max <= 2.0 * s.lambda + 1e-9);
    // theta = theta_u + theta_b pointwise in norm terms (spot check via sums)
    for (long t = 0; t < led.T; ++t) {
        double tu = led.theta_u_norm_sq[t], tb = led.theta_b_norm_sq[t];
        double tn = led.theta_norm_sq[t];
        CHECK(tn <= 2.0 * tu + 2.0 * tb + 1e-9);
    }
}

TEST_CASE("per-step convex inequality holds pointwise (heavy-tail noise)") {
    Objective obj = builtin_objective("quadratic", 2, {{"a", {4.0, 2.0}}});
    auto noise = NoiseModel::pareto_sphere(2, 1.8, 1.5, 1.0);
    Schedule s = schedule_convex(1024, 0.1, 1.0, 1.5, obj.smoothness_L, 1.0);
    Point x1 = convex_start(obj, 1.0);
    for (std::uint64_t trial = 1; trial <= 5; ++trial) {
        RngStream rng(2025, trial);
        auto led = run_clipped_sgd(obj, noise, s, 1024, x1, rng);
        auto rep = check_convex_per_step(led);
        CHECK(rep.pass);
        CHECK(rep.violations == 0);
        CHECK(rep.checked == 1024);
    }
}

TEST_CASE("per-step nonconvex inequality holds pointwise (two_point noise)") {
    Objective obj = builtin_objective("nonconvex-sigmoid-well", 2, {{"a", {3.0}}});
    auto noise = NoiseModel::two_point(2, 100.0, 1e-3, 1.5);
    Point x1{0.57735026918962576, 0.57735026918962576};
    double delta1 = obj.value(x1) - obj.f_star;
    Schedule s = schedule_nonconvex(1024, 0.1, 1.0, 1.5, obj.smoothness_L, delta1);
    for (std::uint64_t trial = 1; trial <= 5; ++trial) {
        RngStream rng(2026, trial);
        auto led = run_clipped_sgd(obj, noise, s, 1024, x1, rng);
        REQUIRE(led.exact_conditional_mean);
        auto rep = check_nonconvex_per_step(led);
        CHECK(rep.pass);
        CHECK(rep.violations == 0);
    }
}

TEST_CASE("nonconvex per-step check refuses approximate decompositions") {
    Objective obj = builtin_objective("nonconvex-sigmoid-well", 2, {{"a", {3.0}}});
    auto noise = NoiseModel::pareto_sphere(2, 1.8, 1.5, 1.0);
    Point x1{0.5, 0.5};
    Schedule s = schedule_nonconvex(16, 0.1, 1.0, 1.5, obj.smoothness_L,
                                    obj.value(x1) - obj.f_star);
    RngStream rng(3, 1);
    auto led = run_clipped_sgd(obj, noise, s, 16, x1, rng);
    CHECK_FALSE(led.exact_conditional_mean);
    CHECK_THROWS_AS(check_nonconvex_per_step(led), std::invalid_argument);
}

TEST_CASE("clipped norm never exceeds lambda") {
    Objective obj = builtin_objective("quadratic", 1, {{"a", {1.0}}});
    auto noise = NoiseModel::pareto_sphere(1, 1.8, 1.5, 1.0);
    ScheduleInputs in{500, 0.1, 1.0, 1.5, 1.0, 1.0};
    Schedule s = schedule_manual(0.05, 2.0, in);
    RngStream rng(11, 1);
    auto led = run_clipped_sgd(obj, noise, s, 500, Point{1.0}, rng, LedgerDetail::full);
    for (long t = 0; t < led.T; ++t) {
        Point step = led.points[t] - led.points[t + 1];
        CHECK(norm(step) <= 0.05 * 2.0 * (1.0 + 1e-12));
    }
}

TEST_CASE("dimension mismatches are rejected") {
    Objective obj = builtin_objective("quadratic", 2, {});
    auto noise = NoiseModel::gaussian(3, 1.0);
    ScheduleInputs in{4, 0.1, 1.0, 2.0, 1.0, 1.0};
    Schedule s = schedule_manual(0.1, 1.0, in);
    RngStream rng(1, 1);
    Point x1{1.0, 1.0};
    CHECK_THROWS_AS(run_clipped_sgd(obj, noise, s, 4, x1, rng), std::invalid_argument);
    auto noise2 = NoiseModel::gaussian(2, 1.0);
    Point bad_x{1.0};
    CHECK_THROWS_AS(run_clipped_sgd(obj, noise2, s, 4, bad_x, rng), std::invalid_argument);
}

TEST_CASE("smoothed-huber trajectory satisfies the convex per-step inequality") {
    Objective obj = builtin_objective("smoothed-huber", 2, {{"a", {2.0}}, {"delta", {0.5}}});
    CHECK(obj.smoothness_L == doctest::Approx(4.0));  // max a / delta
    auto noise = NoiseModel::pareto_sphere(2, 1.8, 1.5, 1.0);
    Schedule s = schedule_convex(512, 0.1, 1.0, 1.5, obj.smoothness_L, 2.0);
    RngStream rng(44, 1);
    auto led = run_clipped_sgd(obj, noise, s, 512, convex_start(obj, 2.0), rng);
    auto rep = check_convex_per_step(led);
    CHECK(rep.pass);
    CHECK(rep.violations == 0);
}

TEST_CASE("sequenced manual schedules") {
    Objective obj = builtin_objective("quadratic", 1, {{"a", {1.0}}});
    auto noise = NoiseModel::gaussian(1, 0.0);
    SUBCASE("per-step step sizes applied in order") {
        std::vector<double> etas{0.1, 0.2};
        std::vector<double> lambdas{10.0, 10.0};
        RngStream rng(1, 1);
        auto led = run_clipped_sgd_sequenced(obj, noise, etas, lambdas, Point{1.0}, rng,
                                             LedgerDetail::full);
        CHECK(led.points[1][0] == doctest::Approx(0.9).epsilon(1e-15));
        CHECK(led.points[2][0] == doctest::Approx(0.72).epsilon(1e-15));
        CHECK_FALSE(led.constant_schedule);
    }
    SUBCASE("constant arrays reproduce the constant-schedule run bit-for-bit") {
        auto pareto = NoiseModel::pareto_sphere(1, 1.8, 1.5, 1.0);
        ScheduleInputs in{100, 0.1, 1.0, 1.5, 1.0, 1.0};
        Schedule s = schedule_manual(0.01, 2.0, in);
        RngStream r1(6, 2), r2(6, 2);
        auto a = run_clipped_sgd(obj, pareto, s, 100, Point{1.0}, r1);
        std::vector<double> etas(100, 0.01), lambdas(100, 2.0);
        auto b = run_clipped_sgd_sequenced(obj, pareto, etas, lambdas, Point{1.0}, r2);
        REQUIRE(a.delta[100] == b.delta[100]);
        REQUIRE(a.metric_convex() == b.metric_convex());
    }
    SUBCASE("checkers refuse sequenced ledgers") {
        std::vector<double> etas{0.1, 0.1};
        std::vector<double> lambdas{10.0, 10.0};
        RngStream rng(1, 2);
        auto led = run_clipped_sgd_sequenced(obj, noise, etas, lambdas, Point{1.0}, rng);
        CHECK_THROWS_AS(check_convex_per_step(led), std::invalid_argument);
    }
    SUBCASE("length mismatch rejected") {
        std::vector<double> etas{0.1};
        std::vector<double> lambdas{10.0, 10.0};
        RngStream rng(1, 3);
        CHECK_THROWS_AS(run_clipped_sgd_sequenced(obj, noise, etas, lambdas, Point{1.0}, rng),
                        std::invalid_argument);
    }
}

TEST_CASE("ledger decomposition matches the reference split on a replay") {
    Objective obj = builtin_objective("quadratic", 2, {{"a", {1.0, 2.0}}});
    auto noise = NoiseModel::two_point(2, 50.0, 0.02, 1.5);
    Schedule s = schedule_convex(64, 0.1, noise.sigma(), 1.5, 2.0, 1.0);
    RngStream rng(91, 1);
    auto led = run_clipped_sgd(obj, noise, s, 64, convex_start(obj, 1.0), rng,
                               LedgerDetail::full);
    REQUIRE(led.exact_conditional_mean);
    RngStream replay(91, 1);
    Point xi(2);
    for (long t = 0; t < led.T; ++t) {
        Point g = obj.gradient(led.points[t]);
        noise.sample_into(replay, xi);
        Point clipped = clip(g + xi, s.lambda);
        auto mean = noise.clipped_conditional_mean(g, s.lambda);
        REQUIRE(mean.has_value());
        auto dec = decompose_clip_error(g, clipped, *mean, true);
        // the split is exact by construction
        for (int k = 0; k < 2; ++k)
            REQUIRE(dec.theta[k] == dec.theta_u[k] + dec.theta_b[k]);
        CHECK(norm_sq(dec.theta) == doctest::Approx(led.theta_norm_sq[t]).epsilon(1e-12));
        CHECK(norm_sq(dec.theta_u) == doctest::Approx(led.theta_u_norm_sq[t]).epsilon(1e-12));
        CHECK(norm_sq(dec.theta_b) ==
              doctest::Approx(led.theta_b_norm_sq[t]).epsilon(1e-12).scale(1e-30));
        CHECK(norm(dec.theta_u) <= 2.0 * s.lambda + 1e-9);
    }
}

TEST_CASE("trajectory CSV carries the versioned header and event sums") {
    Objective obj = builtin_objective("quadratic", 1, {});
    auto noise = NoiseModel::two_point(1, 10.0, 0.01, 2.0);
    Schedule s = schedule_convex(8, 0.1, 1.0, 2.0, 1.0, 1.0);
    RngStream rng(5, 1);
    auto led = run_clipped_sgd(obj, noise, s, 8, convex_start(obj, 1.0), rng);
    std::string csv = led.to_csv();
    CHECK(csv.rfind("# heavyclip-csv v1\n", 0) == 0);
    CHECK(csv.find("t,delta_t,r_t,grad_norm_sq,theta_norm_sq,clipped,") != std::string::npos);
    CHECK(csv.find("cum_theta_norm_sq") != std::string::npos);
}

}  // TEST_SUITE
