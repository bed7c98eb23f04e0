#include "inthedge/call_analytic.hpp"

#include <cmath>

#include "inthedge/common.hpp"
#include "inthedge/pricer.hpp"

namespace inthedge {

namespace {

void validate(const CallOneStepParams& p) {
    if (!(p.strike > 0.0) || !std::isfinite(p.strike))
        throw InputError("call step: strike must be positive and finite");
    if (p.n_units < 1) throw InputError("call step: need at least one unit");
    validate_step_bounds(p.k_down, p.k_up);
    if (!(p.spot > 0.0) || !std::isfinite(p.spot))
        throw InputError("call step: spot must be positive and finite");
}

// Cost of holding theta units through the step, valid in the middle region
// where the strike lies strictly inside the support window.
double middle_cost(const CallOneStepParams& p, double theta, double crossing) {
    const double n = static_cast<double>(p.n_units);
    if (theta >= crossing) return theta * p.spot * (1.0 - p.k_down);
    return theta * p.spot * (1.0 - p.k_up) + n * (p.k_up * p.spot - p.strike);
}

}  // namespace

double alpha(const CallOneStepParams& p) {
    validate(p);
    if (p.spot <= p.strike / p.k_up || p.spot >= p.strike / p.k_down)
        throw InputError("alpha: spot is outside the middle region");
    const double n = static_cast<double>(p.n_units);
    return (n * p.k_up * p.spot - n * p.strike) / (p.spot * (p.k_up - p.k_down));
}

ClosedFormResult closed_form(const CallOneStepParams& p) {
    validate(p);
    if (p.spot <= p.strike / p.k_up) return ClosedFormResult{0.0, 0};
    if (p.spot >= p.strike / p.k_down)
        return ClosedFormResult{static_cast<double>(p.n_units) * (p.spot - p.strike), p.n_units};

    const double crossing = alpha(p);
    const int m = static_cast<int>(std::floor(crossing));
    const double at_m = middle_cost(p, m, crossing);
    const double at_m1 = middle_cost(p, m + 1, crossing);
    // Costs that tie up to rounding resolve to the smaller position.
    if (at_m <= at_m1 + value_tol(std::max(std::abs(at_m), std::abs(at_m1))))
        return ClosedFormResult{at_m, m};
    return ClosedFormResult{at_m1, m + 1};
}

}  // namespace inthedge
