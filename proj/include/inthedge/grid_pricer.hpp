#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "inthedge/pricer.hpp"
#include "inthedge/pwa.hpp"

namespace inthedge {

// Uniform spot grid x_i = step * i. Row t exists for every initial spot up to
// s0_max: its last index is N_t = floor(s0_max * K_t^t / step) where K_t is
// the largest upward factor among the first t steps, so every window reachable
// from the row below lands on the grid (up to sub-step flooring slack).
struct GridSpec {
    double step = 0.1;
    double s0_max = 0.0;
};

// Last node index N_t per row, t = 0..horizon.
std::vector<std::size_t> grid_sizes(const GridSpec& spec, const SupportModel& model);

struct GridTable {
    int n_units = 1;
    double step = 0.0;
    SupportModel model;
    // prices[t][i] is the time-t cost at spot step * i (horizon + 1 rows);
    // positions[t][i] is the integer hedge held from t to t + 1 (horizon rows).
    std::vector<std::vector<double>> prices;
    std::vector<std::vector<int>> positions;

    std::size_t horizon() const { return model.horizon(); }
};

// Piecewise-linear read of a grid row at spot x; beyond the last node the
// final cell's slope extends linearly.
double interpolate_row(const std::vector<double>& row, double step, double x);

// Backward induction on the grid. Window suprema scan grid nodes plus the two
// interpolated window endpoints; off-grid window tops (flooring slack at the
// very last node of a row) extrapolate the last cell.
GridTable grid_backward_price(const PiecewiseAffine& payoff, int n_units,
                              const SupportModel& model, const GridSpec& spec);

// Persists one CSV per time step (x, price and, before the horizon, theta)
// plus a manifest.json describing shapes; read_grid_table loads it back.
void write_grid_table(const GridTable& table, const std::filesystem::path& dir);
GridTable read_grid_table(const std::filesystem::path& dir);

}  // namespace inthedge
