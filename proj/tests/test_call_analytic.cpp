#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "inthedge/call_analytic.hpp"
#include "inthedge/pricer.hpp"
#include "oracles.hpp"

using inthedge::CallOneStepParams;
using inthedge::InputError;
using inthedge::PiecewiseAffine;
using testutil::close;

TEST_CASE("alpha at the canonical middle-region point") {
    const CallOneStepParams p{500.0, 5, 0.9, 1.2, 500.0};
    CHECK(close(inthedge::alpha(p), 10.0 / 3.0));
    CHECK_THROWS_AS(inthedge::alpha(CallOneStepParams{500.0, 5, 0.9, 1.2, 400.0}), InputError);
    CHECK_THROWS_AS(inthedge::alpha(CallOneStepParams{500.0, 5, 0.9, 1.2, 600.0}), InputError);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(inthedge::closed_form(CallOneStepParams{0.0, 1, 0.9, 1.2, 500.0}), InputError);
    CHECK_THROWS_AS(inthedge::closed_form(CallOneStepParams{500.0, 0, 0.9, 1.2, 500.0}),
                    InputError);
    CHECK_THROWS_AS(inthedge::closed_form(CallOneStepParams{500.0, 1, 1.1, 1.2, 500.0}),
                    InputError);
    CHECK_THROWS_AS(inthedge::closed_form(CallOneStepParams{500.0, 1, 0.9, 0.95, 500.0}),
                    InputError);
    CHECK_THROWS_AS(inthedge::closed_form(CallOneStepParams{500.0, 1, 0.9, 1.2, 0.0}), InputError);
}

TEST_CASE("low region costs exactly zero with no position") {
    for (int n : {1, 5, 100}) {
        for (double s : {1.0, 100.0, 250.0, 500.0 / 1.2}) {
            const auto r = inthedge::closed_form(CallOneStepParams{500.0, n, 0.9, 1.2, s});
            CHECK(r.value == 0.0);
            CHECK(r.theta_star == 0);
        }
    }
}

TEST_CASE("high region costs exactly the intrinsic value with full cover") {
    for (int n : {1, 5, 100}) {
        for (double s : {500.0 / 0.9, 600.0, 1000.0, 5000.0}) {
            const auto r = inthedge::closed_form(CallOneStepParams{500.0, n, 0.9, 1.2, s});
            CHECK(r.value == n * (s - 500.0));
            CHECK(r.theta_star == n);
        }
    }
}

TEST_CASE("middle region worked points") {
    const auto one = inthedge::closed_form(CallOneStepParams{500.0, 1, 0.9, 1.2, 500.0});
    CHECK(close(one.value, 50.0));
    CHECK(one.theta_star == 1);

    // Holding 3 or 4 units both cost 200 at the strike; the smaller wins.
    const auto five = inthedge::closed_form(CallOneStepParams{500.0, 5, 0.9, 1.2, 500.0});
    CHECK(close(five.value, 200.0));
    CHECK(five.theta_star == 3);
    CHECK(close(five.value / 5.0, 40.0));
}

TEST_CASE("closed form is continuous across region boundaries") {
    for (int n : {1, 7, 100}) {
        const CallOneStepParams base{500.0, n, 0.9, 1.2, 0.0};
        for (double edge : {500.0 / 1.2, 500.0 / 0.9}) {
            CallOneStepParams below = base;
            below.spot = edge * (1.0 - 1e-9);
            CallOneStepParams above = base;
            above.spot = edge * (1.0 + 1e-9);
            const double vb = inthedge::closed_form(below).value;
            const double va = inthedge::closed_form(above).value;
            // The probe spots straddling the edge are 2e-9 * edge apart, so the
            // value may legitimately move by about n * strike * 1e-9.
            CHECK(std::abs(va - vb) <= 1e-8 * n * 500.0);
        }
    }
}

TEST_CASE("closed form agrees with the generic one-step optimizer") {
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> strike_dist(50.0, 900.0);
    std::uniform_int_distribution<int> n_dist(1, 40);
    std::uniform_real_distribution<double> spot_dist(1.0, 1500.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto [k_down, k_up] = testutil::random_bounds(rng);
        const CallOneStepParams p{strike_dist(rng), n_dist(rng), k_down, k_up, spot_dist(rng)};
        const auto analytic = inthedge::closed_form(p);
        const PiecewiseAffine claim =
            scale(PiecewiseAffine::call_payoff(p.strike), static_cast<double>(p.n_units));
        const auto generic = inthedge::one_step_optimal(claim, p.k_down, p.k_up, p.spot);
        REQUIRE(close(analytic.value, generic.value));
        // The two tie-break rules can only diverge when both positions are
        // optimal up to rounding; any other mismatch is a bug.
        if (analytic.theta_star != generic.theta_star) {
            const double cost = inthedge::one_step_value(claim, p.k_down, p.k_up, p.spot,
                                                         analytic.theta_star);
            REQUIRE(close(cost, generic.value));
        }
    }
}

TEST_CASE("closed-form position always super-hedges across the window") {
    std::mt19937 rng(4321);
    std::uniform_real_distribution<double> udist(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto [k_down, k_up] = testutil::random_bounds(rng);
        const double strike = 50.0 + 900.0 * udist(rng);
        const int n = 1 + static_cast<int>(udist(rng) * 20);
        const double spot = 1.0 + 1400.0 * udist(rng);
        const CallOneStepParams p{strike, n, k_down, k_up, spot};
        const auto r = inthedge::closed_form(p);
        for (int rep = 0; rep < 40; ++rep) {
            const double y = (k_down + (k_up - k_down) * udist(rng)) * spot;
            const double wealth = r.value + r.theta_star * (y - spot);
            const double owed = n * std::max(0.0, y - strike);
            REQUIRE(wealth >= owed - 1e-9 * std::max(1.0, owed));
        }
    }
}
