#pragma once

namespace inthedge {

// One hedging step for n call options struck at `strike`, spot at `spot`, with
// the ratio S_next / spot confined to [k_down, k_up].
struct CallOneStepParams {
    double strike = 0.0;
    int n_units = 1;
    double k_down = 0.0;
    double k_up = 0.0;
    double spot = 0.0;
};

// Crossing point (in hedge units) between the rising hold-cost branch and the
// falling shortfall branch; only defined strictly between the trivial regions.
double alpha(const CallOneStepParams& p);

struct ClosedFormResult {
    double value = 0.0;
    int theta_star = 0;
};

// Minimal one-step super-hedging cost of n calls in closed form.
//   spot <= strike / k_up  : the window never reaches the strike, cost 0.
//   spot >= strike / k_down: the window stays past the strike, cost n (spot - strike).
//   otherwise the best integer position is floor(alpha) or floor(alpha) + 1,
//   decided by direct comparison; ties go to the smaller position.
ClosedFormResult closed_form(const CallOneStepParams& p);

}  // namespace inthedge
