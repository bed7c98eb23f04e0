#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "inthedge/grid_pricer.hpp"
#include "oracles.hpp"

using inthedge::GridSpec;
using inthedge::GridTable;
using inthedge::InputError;
using inthedge::PiecewiseAffine;
using inthedge::SupportModel;
using testutil::close;

namespace {

// Exact supremum of the piecewise-linear interpolant of `row` over
// [w_lo, w_hi], shifted by -theta * x: attained at a node or a window edge.
double interp_window_sup(const std::vector<double>& row, double step, double w_lo, double w_hi,
                         double theta) {
    const auto value_at = [&](double x) {
        const double pos = x / step;
        const std::size_t last = row.size() - 1;
        if (pos >= static_cast<double>(last))
            return row[last] + (pos - static_cast<double>(last)) * (row[last] - row[last - 1]);
        const std::size_t j = static_cast<std::size_t>(pos);
        return row[j] + (pos - j) * (row[j + 1] - row[j]);
    };
    double sup = std::max(value_at(w_lo) - theta * w_lo, value_at(w_hi) - theta * w_hi);
    for (std::size_t j = 0; j < row.size(); ++j) {
        const double x = step * static_cast<double>(j);
        if (x > w_lo && x < w_hi) sup = std::max(sup, row[j] - theta * x);
    }
    return sup;
}

PiecewiseAffine random_payoff_with_kinks(std::mt19937& rng) {
    std::uniform_real_distribution<double> xdist(5.0, 450.0);
    std::uniform_real_distribution<double> ydist(0.0, 120.0);
    std::uniform_real_distribution<double> sdist(-2.0, 3.0);
    std::vector<double> xs{0.0, xdist(rng), xdist(rng), xdist(rng)};
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<std::pair<double, double>> knots;
    for (double x : xs) knots.emplace_back(x, ydist(rng));
    return PiecewiseAffine::from_knots(knots, sdist(rng));
}

}  // namespace

TEST_CASE("grid sizes follow the cap formula and grow monotonically") {
    const GridSpec spec{0.1, 1000.0};

    const auto uniform = inthedge::grid_sizes(spec, SupportModel::uniform(0.9, 1.2, 2));
    REQUIRE(uniform == std::vector<std::size_t>{10000, 12000, 14400});

    const auto mixed = inthedge::grid_sizes(spec, SupportModel({0.9, 0.95}, {1.5, 1.01}));
    REQUIRE(mixed == std::vector<std::size_t>{10000, 15000, 22500});

    const auto coarse = inthedge::grid_sizes(GridSpec{0.7, 10.0}, SupportModel::uniform(0.5, 1.3, 3));
    for (std::size_t t = 1; t < coarse.size(); ++t) REQUIRE(coarse[t] >= coarse[t - 1]);
}

TEST_CASE("grid input validation") {
    const SupportModel model = SupportModel::uniform(0.9, 1.2, 1);
    const PiecewiseAffine call = PiecewiseAffine::call_payoff(500.0);
    CHECK_THROWS_AS(inthedge::grid_sizes(GridSpec{0.0, 100.0}, model), InputError);
    CHECK_THROWS_AS(inthedge::grid_sizes(GridSpec{-1.0, 100.0}, model), InputError);
    CHECK_THROWS_AS(inthedge::grid_sizes(GridSpec{1.0, 0.0}, model), InputError);
    CHECK_THROWS_AS(inthedge::grid_sizes(GridSpec{1.0, 0.5}, model), InputError);
    CHECK_THROWS_AS(inthedge::grid_backward_price(call, 0, model, GridSpec{0.5, 100.0}),
                    InputError);
}

TEST_CASE("terminal grid row holds the scaled payoff") {
    const PiecewiseAffine call = PiecewiseAffine::call_payoff(50.0);
    const auto table = inthedge::grid_backward_price(call, 3, SupportModel::uniform(0.9, 1.2, 1),
                                                     GridSpec{0.5, 100.0});
    REQUIRE(table.prices.size() == 2);
    const auto& last = table.prices[1];
    REQUIRE(last.size() == 241);  // floor(100 * 1.2 / 0.5) + 1
    for (std::size_t i = 0; i < last.size(); ++i) {
        const double x = 0.5 * static_cast<double>(i);
        REQUIRE(last[i] == 3.0 * std::max(0.0, x - 50.0));
    }
}

TEST_CASE("stored positions realize the stored prices") {
    std::mt19937 rng(2121);
    for (int trial = 0; trial < 6; ++trial) {
        const PiecewiseAffine payoff = random_payoff_with_kinks(rng);
        const auto [k_down, k_up] = testutil::random_bounds(rng);
        const SupportModel model = SupportModel::uniform(k_down, k_up, 2);
        const auto table = inthedge::grid_backward_price(payoff, 2, model, GridSpec{0.5, 300.0});
        for (std::size_t t = 0; t < table.horizon(); ++t) {
            const auto& row = table.prices[t];
            const auto& next = table.prices[t + 1];
            for (std::size_t i = 0; i < row.size(); i += 7) {
                const double x = table.step * static_cast<double>(i);
                if (x == 0.0) continue;
                const int theta = table.positions[t][i];
                const double cost =
                    interp_window_sup(next, table.step, k_down * x, k_up * x, theta) + theta * x;
                REQUIRE(close(cost, row[i]));
            }
        }
    }
}

TEST_CASE("grid prices track exact prices within the advertised bound") {
    std::mt19937 rng(3131);
    for (int trial = 0; trial < 8; ++trial) {
        const PiecewiseAffine payoff = random_payoff_with_kinks(rng);
        const auto [k_down, k_up] = testutil::random_bounds(rng);
        const std::size_t horizon = 1 + static_cast<std::size_t>(trial % 3);
        const SupportModel model = SupportModel::uniform(k_down, k_up, horizon);
        const int n_units = 1 + (trial % 2) * 2;

        const auto exact = inthedge::backward_price(payoff, n_units, model);
        const double lipschitz = exact.prices.back().lipschitz();

        const double coarse_step = 0.5;
        const auto coarse = inthedge::grid_backward_price(payoff, n_units, model,
                                                          GridSpec{coarse_step, 500.0});
        double worst = 0.0;
        for (std::size_t i = 0; i < coarse.prices[0].size(); ++i) {
            const double x = coarse_step * static_cast<double>(i);
            if (x == 0.0) continue;
            worst = std::max(worst, std::abs(coarse.prices[0][i] - exact.prices[0](x)));
        }
        REQUIRE(worst <= lipschitz * static_cast<double>(horizon) * coarse_step + 1e-9);
    }
}

TEST_CASE("one-period call grid is exact in the flat and intrinsic regions") {
    const PiecewiseAffine call = PiecewiseAffine::call_payoff(500.0);
    const SupportModel model = SupportModel::uniform(0.9, 1.2, 1);
    const auto table = inthedge::grid_backward_price(call, 1, model, GridSpec{0.1, 1000.0});
    // x = 100 never reaches the strike; x = 900 is surely past it.
    CHECK(close(table.prices[0][1000], 0.0));
    CHECK(close(table.prices[0][9000], 400.0));
    CHECK(table.positions[0][9000] == 1);
}

TEST_CASE("halving the step about halves the worst node error") {
    std::mt19937 rng(4141);
    double total_coarse = 0.0;
    double total_fine = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const PiecewiseAffine payoff = random_payoff_with_kinks(rng);
        const SupportModel model = SupportModel::uniform(0.88, 1.17, 2);
        const auto exact = inthedge::backward_price(payoff, 1, model);

        const auto errs = [&](double step) {
            const auto grid =
                inthedge::grid_backward_price(payoff, 1, model, GridSpec{step, 400.0});
            double worst = 0.0;
            // Audit on the coarse lattice so both runs share the spots.
            for (double x = 1.0; x <= 400.0; x += 1.0)
                worst = std::max(
                    worst, std::abs(grid.prices[0][static_cast<std::size_t>(x / step + 0.5)] -
                                    exact.prices[0](x)));
            return worst;
        };
        total_coarse += errs(1.0);
        total_fine += errs(0.5);
    }
    REQUIRE(total_fine <= 0.75 * total_coarse + 1e-9);
}

TEST_CASE("grid tables round-trip through the on-disk format exactly") {
    std::mt19937 rng(5151);
    const PiecewiseAffine payoff = random_payoff_with_kinks(rng);
    const SupportModel model({0.93, 0.9}, {1.21, 1.07});
    const auto table = inthedge::grid_backward_price(payoff, 2, model, GridSpec{0.5, 120.0});

    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "inthedge_grid_roundtrip";
    std::filesystem::remove_all(dir);
    inthedge::write_grid_table(table, dir);
    const GridTable loaded = inthedge::read_grid_table(dir);

    CHECK(loaded.n_units == table.n_units);
    CHECK(loaded.step == table.step);
    CHECK(loaded.model.k_down == table.model.k_down);
    CHECK(loaded.model.k_up == table.model.k_up);
    REQUIRE(loaded.prices.size() == table.prices.size());
    for (std::size_t t = 0; t < table.prices.size(); ++t) {
        REQUIRE(loaded.prices[t].size() == table.prices[t].size());
        for (std::size_t i = 0; i < table.prices[t].size(); ++i)
            REQUIRE(loaded.prices[t][i] == table.prices[t][i]);
    }
    REQUIRE(loaded.positions == table.positions);

    SECTION("manifest and row errors are reported as input errors") {
        std::filesystem::remove(dir / "step_001.csv");
        CHECK_THROWS_AS(inthedge::read_grid_table(dir), InputError);
        CHECK_THROWS_AS(inthedge::read_grid_table(dir / "missing"), InputError);
    }
    SECTION("corrupt rows are rejected") {
        std::ofstream out(dir / "step_000.csv", std::ios::app);
        out << "not,a,number\n";
        out.close();
        CHECK_THROWS_AS(inthedge::read_grid_table(dir), InputError);
    }
}
