#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "inthedge/real_oracle.hpp"
#include "oracles.hpp"

using inthedge::InputError;
using inthedge::PiecewiseAffine;
using inthedge::SupportModel;
using testutil::close;

namespace {

// Real-position one-step cost evaluated the slow way: dense sweep over
// fractional positions, dense sweep over the window for each.
double brute_real_one_step(const PiecewiseAffine& g, double k_down, double k_up, double s) {
    const double limit = g.lipschitz() + 1.0;
    double best = 1e308;
    const int steps = 20000;
    for (int i = 0; i <= steps; ++i) {
        const double theta = -limit + 2.0 * limit * i / steps;
        const double lo = k_down * s;
        const double hi = k_up * s;
        double sup = -1e308;
        const auto consider = [&](double x) {
            if (x >= lo && x <= hi) sup = std::max(sup, g(x) - theta * x);
        };
        consider(lo);
        consider(hi);
        for (double b : g.breakpoints()) consider(b);
        best = std::min(best, sup + theta * s);
    }
    return best;
}

// Chord recursion evaluated pointwise through the whole tree of window
// endpoints; exponential in the horizon but independent of the curve algebra.
double chord_tree_price(const PiecewiseAffine& payoff, const SupportModel& model, std::size_t t,
                        double s) {
    if (t == model.horizon()) return payoff(s);
    const double k_down = model.k_down[t];
    const double k_up = model.k_up[t];
    const double w_down = (k_up - 1.0) / (k_up - k_down);
    const double w_up = (1.0 - k_down) / (k_up - k_down);
    return w_down * chord_tree_price(payoff, model, t + 1, k_down * s) +
           w_up * chord_tree_price(payoff, model, t + 1, k_up * s);
}

}  // namespace

TEST_CASE("convexity detection") {
    CHECK(inthedge::is_convex(PiecewiseAffine::call_payoff(500.0)));
    CHECK(inthedge::is_convex(PiecewiseAffine::put_payoff(500.0)));
    CHECK(inthedge::is_convex(PiecewiseAffine::constant(3.0)));

    // A tent function is not convex.
    const std::vector<std::pair<double, double>> tent{{0.0, 0.0}, {100.0, 100.0}};
    CHECK_FALSE(inthedge::is_convex(PiecewiseAffine::from_knots(tent, -1.0)));

    std::mt19937 rng(1);
    for (int trial = 0; trial < 50; ++trial)
        CHECK(inthedge::is_convex(testutil::random_convex_pwa(rng)));
}

TEST_CASE("real one-step cost of a call at the strike is the chord value") {
    const PiecewiseAffine call = PiecewiseAffine::call_payoff(500.0);
    // Chord across [450, 600]: (2/3) * 0 + (1/3) * 100.
    CHECK(close(inthedge::real_one_step(call, 0.9, 1.2, 500.0), 100.0 / 3.0));
    // Scaling the claim scales the cost linearly; no integrality friction.
    CHECK(close(inthedge::real_one_step(scale(call, 5.0), 0.9, 1.2, 500.0), 500.0 / 3.0));
}

TEST_CASE("real one-step cost matches a dense scan and lower-bounds the integer cost") {
    std::mt19937 rng(8080);
    std::uniform_real_distribution<double> sdist(1.0, 1200.0);
    for (int trial = 0; trial < 40; ++trial) {
        const PiecewiseAffine g = testutil::random_pwa(rng);
        const auto [k_down, k_up] = testutil::random_bounds(rng);
        const double s = sdist(rng);

        const double fast = inthedge::real_one_step(g, k_down, k_up, s);
        const double slow = brute_real_one_step(g, k_down, k_up, s);
        // The dense scan overshoots by at most its position resolution times
        // the envelope's slope scale.
        const double resolution = 2.0 * (g.lipschitz() + 1.0) / 20000.0;
        REQUIRE(fast <= slow + 1e-9 * std::max(1.0, std::abs(slow)));
        REQUIRE(slow <= fast + resolution * s * (k_up - k_down) + 1e-9);

        const auto integer = inthedge::one_step_optimal(g, k_down, k_up, s);
        REQUIRE(fast <= integer.value + 1e-9 * std::max(1.0, std::abs(integer.value)));
    }
}

TEST_CASE("backward real prices match the endpoint-tree recursion") {
    std::mt19937 rng(909);
    std::uniform_real_distribution<double> sdist(0.5, 900.0);
    for (int trial = 0; trial < 20; ++trial) {
        const PiecewiseAffine payoff = testutil::random_convex_pwa(rng);
        std::vector<double> downs, ups;
        for (int t = 0; t < 4; ++t) {
            const auto [k_down, k_up] = testutil::random_bounds(rng);
            downs.push_back(k_down);
            ups.push_back(k_up);
        }
        const SupportModel model(downs, ups);
        const auto curves = inthedge::real_backward_price(payoff, model);
        REQUIRE(curves.size() == model.horizon() + 1);
        for (int rep = 0; rep < 25; ++rep) {
            const double s = sdist(rng);
            REQUIRE(close(curves[0](s), chord_tree_price(payoff, model, 0, s)));
        }
        for (const auto& c : curves) CHECK(inthedge::is_convex(c));
    }
}

TEST_CASE("backward real prices agree with the one-step rule applied to themselves") {
    std::mt19937 rng(111);
    std::uniform_real_distribution<double> sdist(0.5, 900.0);
    const PiecewiseAffine payoff = testutil::random_convex_pwa(rng);
    const SupportModel model({0.85, 0.92}, {1.25, 1.1});
    const auto curves = inthedge::real_backward_price(payoff, model);
    for (std::size_t t = 0; t < model.horizon(); ++t) {
        for (int rep = 0; rep < 50; ++rep) {
            const double s = sdist(rng);
            REQUIRE(close(curves[t](s),
                          inthedge::real_one_step(curves[t + 1], model.k_down[t], model.k_up[t], s)));
        }
    }
}

TEST_CASE("long horizons with narrow bounds keep the knot count polynomial") {
    // Every product k_down^i * k_up^j is reached along many multiplication
    // orders that disagree at ulp level; those must fuse into one knot, so the
    // knot count stays triangular in the horizon instead of doubling per step.
    const PiecewiseAffine call = PiecewiseAffine::call_payoff(60.0);
    const SupportModel model = SupportModel::uniform(0.988, 1.014, 20);
    const auto curves = inthedge::real_backward_price(call, model);
    CHECK(curves[0].piece_count() <= 21 * 22 / 2 + 1);
    for (const auto& c : curves) CHECK(inthedge::is_convex(c));
    for (double s : {20.0, 55.0, 59.5, 60.0, 61.2, 70.0, 150.0}) {
        REQUIRE(close(curves[0](s), chord_tree_price(call, model, 0, s),
                      1e-9 * std::max(1.0, s)));
    }
}

TEST_CASE("non-convex payoffs are rejected by the backward recursion") {
    const std::vector<std::pair<double, double>> tent{{0.0, 0.0}, {100.0, 100.0}};
    const PiecewiseAffine payoff = PiecewiseAffine::from_knots(tent, -1.0);
    CHECK_THROWS_AS(inthedge::real_backward_price(payoff, SupportModel::uniform(0.9, 1.2, 1)),
                    InputError);
}

TEST_CASE("convergence audit finds no violations for calls") {
    const PiecewiseAffine call = PiecewiseAffine::call_payoff(500.0);
    for (std::size_t horizon : {1u, 2u}) {
        const SupportModel model = SupportModel::uniform(0.9, 1.2, horizon);
        const double bound = 1000.0 * std::pow(1.2, static_cast<double>(horizon));
        const auto report =
            inthedge::check_convergence(call, model, {1, 2, 5, 10}, bound, 200);
        CHECK(report.bound_constant == 2.0 * static_cast<double>(horizon) * bound);
        CHECK(report.domain_cap == bound);
        REQUIRE(report.per_n.size() == 4);
        CHECK(report.max_lower_violation <= 1e-9);
        CHECK(report.max_upper_violation <= 1e-9);
        // More units means finer per-unit granularity: the gap cannot grow.
        for (std::size_t i = 1; i < report.per_n.size(); ++i)
            CHECK(report.per_n[i].sup_gap <=
                  report.per_n[i - 1].sup_gap + 1e-9 * std::max(1.0, report.per_n[i - 1].sup_gap));
    }
}

TEST_CASE("convergence audit input validation") {
    const PiecewiseAffine call = PiecewiseAffine::call_payoff(500.0);
    const SupportModel model = SupportModel::uniform(0.9, 1.2, 1);
    CHECK_THROWS_AS(inthedge::check_convergence(call, model, {}, 1000.0), InputError);
    CHECK_THROWS_AS(inthedge::check_convergence(call, model, {0}, 1000.0), InputError);
    CHECK_THROWS_AS(inthedge::check_convergence(call, model, {1}, -5.0), InputError);
    CHECK_THROWS_AS(inthedge::check_convergence(call, model, {1}, 1000.0, 0), InputError);
}
