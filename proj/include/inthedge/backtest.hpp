#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "inthedge/calibration.hpp"
#include "inthedge/grid_pricer.hpp"
#include "inthedge/pricer.hpp"

namespace inthedge {

// Everything a forward replay needs from a pricing backend.
struct HedgeSource {
    SupportModel model;
    int n_units = 1;
    std::function<double(double)> initial_price;               // spot -> V_0
    std::function<int(std::size_t, double)> position;          // (t, spot) -> theta_t
    std::function<double(double)> terminal_payoff;             // spot -> n * g(spot)
};

// Exact tables evaluate their stored curves; grid tables interpolate price
// rows linearly and take the position at the nearest grid node.
HedgeSource exact_source(PricingTable table);
HedgeSource grid_source(GridTable table);

struct PathRecord {
    double initial_price = 0.0;    // V_0
    double terminal_wealth = 0.0;  // V_T
    double payoff = 0.0;           // n * g(S_T)
    double terminal_spot = 0.0;    // S_T
    double relative_error = 0.0;   // 100 * (V_T - payoff) / S_T
    bool support_breach = false;
    std::size_t first_breach_step = 0;  // meaningful only when support_breach
};

// Self-financing wealth recursion V_{t+1} = V_t + theta_t * (S_{t+1} - S_t)
// starting from V_0 = initial_price(S_0). A step breaches support when its
// realized ratio leaves [k_down[t], k_up[t]]; the boundary itself is inside.
PathRecord replay(const HedgeSource& source, const PricePath& path);
PathRecord replay(const PricingTable& table, const PricePath& path);

struct GroupStats {
    std::size_t count = 0;
    double mean = 0.0;  // zeros when the group is empty
    double min = 0.0;
    double max = 0.0;
};

struct HistogramBin {
    double left = 0.0;
    double right = 0.0;
    std::size_t count = 0;
};

struct BacktestReport {
    std::vector<PathRecord> paths;  // one per test period, in order
    GroupStats all;                 // relative_error statistics
    GroupStats in_support;
    GroupStats breached;
    // Equal-width bins over the in-support relative errors; the last bin is
    // closed on the right. Empty when no path stays in support.
    std::vector<HistogramBin> histogram;
};

BacktestReport run_backtest(const HedgeSource& source, const TrainingSet& test,
                            std::size_t bins = 20);
BacktestReport run_backtest(const PricingTable& table, const TrainingSet& test,
                            std::size_t bins = 20);

// CSV with header "bin_left,bin_right,count".
void write_histogram_csv(const std::vector<HistogramBin>& bins,
                         const std::filesystem::path& file);

}  // namespace inthedge
