#pragma once

#include <cstddef>
#include <vector>

#include "inthedge/pwa.hpp"

namespace inthedge {

// Per-step multiplicative bounds on the price ratio S_{t+1} / S_t: the market
// can move anywhere inside [k_down[t], k_up[t]] with 0 < k_down[t] < 1 < k_up[t].
struct SupportModel {
    std::vector<double> k_down;
    std::vector<double> k_up;

    SupportModel() = default;
    SupportModel(std::vector<double> down, std::vector<double> up);

    static SupportModel uniform(double down, double up, std::size_t horizon);

    std::size_t horizon() const { return k_down.size(); }
};

void validate_step_bounds(double k_down, double k_up);

// Right-continuous integer step function of the spot, used for hedge
// positions. Piece i applies on [breakpoints[i], breakpoints[i+1]).
class IntegerStepFunction {
public:
    IntegerStepFunction(std::vector<double> breakpoints, std::vector<int> values);

    int operator()(double x) const;

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<int>& values() const { return values_; }

private:
    std::vector<double> breakpoints_;
    std::vector<int> values_;
};

// Full backward-induction output: prices[t] is the minimal super-hedging cost
// at time t as a function of the spot (prices has horizon+1 entries, the last
// being n_units * payoff), and strategies[t] is the optimal integer position
// to hold from t to t+1 (horizon entries).
struct PricingTable {
    int n_units = 1;
    SupportModel model;
    std::vector<PiecewiseAffine> prices;
    std::vector<IntegerStepFunction> strategies;

    std::size_t horizon() const { return model.horizon(); }
};

// Knot a projected into the one-step support window [k_down * s, k_up * s].
double clamped_knot(double a, double s, double k_down, double k_up);

// Inclusive integer range that is guaranteed to contain an optimal hedge
// position: [-(L+1), L+1] where L is the Lipschitz constant of g_next.
struct ThetaRange {
    int lo = 0;
    int hi = 0;
};
ThetaRange theta_range(const PiecewiseAffine& g_next);

// Cost of super-hedging g_next over one step when holding theta units:
// sup over the support window of g_next(x) - theta * x, plus theta * s.
double one_step_value(const PiecewiseAffine& g_next, double k_down, double k_up, double s,
                      int theta);

struct OneStepOptimal {
    double value = 0.0;
    int theta_star = 0;
};

// Minimal one-step cost over integer positions; ties resolve to the smallest
// position.
OneStepOptimal one_step_optimal(const PiecewiseAffine& g_next, double k_down, double k_up,
                                double s);

struct OneStepFunction {
    PiecewiseAffine g_prev;
    IntegerStepFunction theta_star;
};

// The one-step cost as a function of the spot, together with the optimal
// position on each piece. Agrees with one_step_optimal pointwise.
OneStepFunction one_step_function(const PiecewiseAffine& g_next, double k_down, double k_up);

// Backward induction from n_units * payoff at the horizon down to time 0.
PricingTable backward_price(const PiecewiseAffine& payoff, int n_units, const SupportModel& model);

}  // namespace inthedge
