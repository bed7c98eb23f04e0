#pragma once

#include <vector>

#include "inthedge/pricer.hpp"
#include "inthedge/pwa.hpp"

namespace inthedge {

// True when slopes are non-decreasing left to right (up to the parallel
// tolerance), i.e. the function is convex.
bool is_convex(const PiecewiseAffine& f);

// Minimal one-step super-hedging cost when the position may be any real
// number. Works for arbitrary claims: the candidate positions are the
// crossings of the shortfall lines spawned by the window endpoints and the
// in-window knots.
double real_one_step(const PiecewiseAffine& g_next, double k_down, double k_up, double s);

// Backward real-position prices g_hat(t, .) for one unit, exact for convex
// payoffs: each step replaces the next curve by its chord across the support
// window, which keeps the curve piecewise affine and convex. Non-convex
// payoffs are rejected; their real-position price curves leave the
// piecewise-affine class, so no exact finite representation exists here.
std::vector<PiecewiseAffine> real_backward_price(const PiecewiseAffine& payoff,
                                                 const SupportModel& model);

struct ConvergencePoint {
    int n_units = 0;
    // Largest shortfall of the per-unit integer price below the real-position
    // price, and largest excess above it beyond the 2*T*M/n allowance.
    double max_lower_violation = 0.0;
    double max_upper_violation = 0.0;
    // Largest |per-unit integer price - real-position price| over the audit grid.
    double sup_gap = 0.0;
};

struct ConvergenceReport {
    std::vector<int> n_values;
    double bound_constant = 0.0;  // 2 * horizon * spot_bound
    double domain_cap = 0.0;      // spot_bound M
    double max_lower_violation = 0.0;
    double max_upper_violation = 0.0;
    std::vector<ConvergencePoint> per_n;
};

// Audits the sandwich g_hat <= g_n / n <= g_hat + 2*T*M/n on a uniform grid of
// audit spots in (0, M / prod(k_up)), for each unit count in n_values.
// spot_bound M caps the terminal spot for every path started on the grid.
ConvergenceReport check_convergence(const PiecewiseAffine& payoff, const SupportModel& model,
                                    const std::vector<int>& n_values, double spot_bound,
                                    int audit_points = 500);

}  // namespace inthedge
