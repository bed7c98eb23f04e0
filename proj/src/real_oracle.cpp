#include "inthedge/real_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace inthedge {

namespace {

void validate_spot(double s) {
    if (!(s > 0.0) || !std::isfinite(s))
        throw InputError("spot must be positive and finite");
}

double chord_weight_down(double k_down, double k_up) {
    return (k_up - 1.0) / (k_up - k_down);
}

double chord_weight_up(double k_down, double k_up) {
    return (1.0 - k_down) / (k_up - k_down);
}

}  // namespace

bool is_convex(const PiecewiseAffine& f) {
    for (std::size_t i = 1; i < f.piece_count(); ++i) {
        const double prev = f.pieces()[i - 1].slope;
        const double next = f.pieces()[i].slope;
        if (next < prev - kParallelTol * std::max({1.0, std::abs(prev), std::abs(next)}))
            return false;
    }
    return true;
}

double real_one_step(const PiecewiseAffine& g_next, double k_down, double k_up, double s) {
    validate_step_bounds(k_down, k_up);
    validate_spot(s);
    const double lo = k_down * s;
    const double hi = k_up * s;

    // Holding theta costs theta * s + sup over the window of g - theta * x, and
    // the supremum sits at a knot or an endpoint. Each candidate x therefore
    // spawns the line theta -> g(x) + theta * (s - x); the cost function is
    // their upper envelope, convex in theta, so its minimum is attained where
    // two of the lines cross.
    std::vector<Affine> lines;  // slope = s - x, intercept = g(x)
    const auto consider = [&](double x) {
        lines.push_back(Affine{s - x, g_next(x)});
    };
    consider(lo);
    consider(hi);
    for (std::size_t j = 1; j < g_next.piece_count(); ++j) {
        const double a = g_next.breakpoints()[j];
        if (a > lo && a < hi) consider(a);
    }

    const auto envelope_at = [&](double theta) {
        double worst = -std::numeric_limits<double>::infinity();
        for (const Affine& l : lines) worst = std::max(worst, l(theta));
        return worst;
    };

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            const double dm = lines[i].slope - lines[j].slope;
            if (std::abs(dm) <=
                kParallelTol * std::max({1.0, std::abs(lines[i].slope), std::abs(lines[j].slope)}))
                continue;
            const double theta = (lines[j].intercept - lines[i].intercept) / dm;
            best = std::min(best, envelope_at(theta));
        }
    }
    if (!std::isfinite(best))
        throw InvariantError("real_one_step: no crossing between candidate lines");
    return best;
}

std::vector<PiecewiseAffine> real_backward_price(const PiecewiseAffine& payoff,
                                                 const SupportModel& model) {
    if (!is_convex(payoff))
        throw InputError(
            "real_backward_price: payoff must be convex; non-convex real-position price "
            "curves are not piecewise affine");

    std::vector<PiecewiseAffine> out(model.horizon() + 1, payoff);
    for (std::size_t t = model.horizon(); t-- > 0;) {
        const double k_down = model.k_down[t];
        const double k_up = model.k_up[t];
        const double w_down = chord_weight_down(k_down, k_up);
        const double w_up = chord_weight_up(k_down, k_up);
        out[t] = add(affine_image(out[t + 1], k_down, w_down, 0.0),
                     affine_image(out[t + 1], k_up, w_up, 0.0));
    }
    return out;
}

ConvergenceReport check_convergence(const PiecewiseAffine& payoff, const SupportModel& model,
                                    const std::vector<int>& n_values, double spot_bound,
                                    int audit_points) {
    if (n_values.empty()) throw InputError("check_convergence: need at least one unit count");
    for (int n : n_values)
        if (n < 1) throw InputError("check_convergence: unit counts must be positive");
    if (!(spot_bound > 0.0) || !std::isfinite(spot_bound))
        throw InputError("check_convergence: spot bound must be positive and finite");
    if (audit_points < 1) throw InputError("check_convergence: need at least one audit spot");

    double growth = 1.0;
    for (double k : model.k_up) growth *= k;
    const double s_cap = spot_bound / growth;

    const std::vector<PiecewiseAffine> real_prices = real_backward_price(payoff, model);
    const PiecewiseAffine& real_now = real_prices.front();

    ConvergenceReport report;
    report.n_values = n_values;
    report.bound_constant = 2.0 * static_cast<double>(model.horizon()) * spot_bound;
    report.domain_cap = spot_bound;

    for (int n : n_values) {
        const PricingTable table = backward_price(payoff, n, model);
        const PiecewiseAffine& integer_now = table.prices.front();
        ConvergencePoint point;
        point.n_units = n;
        const double allowance = report.bound_constant / static_cast<double>(n);
        for (int i = 1; i <= audit_points; ++i) {
            const double s = s_cap * static_cast<double>(i) / (audit_points + 1);
            const double per_unit = integer_now(s) / static_cast<double>(n);
            const double real = real_now(s);
            point.max_lower_violation = std::max(point.max_lower_violation, real - per_unit);
            point.max_upper_violation =
                std::max(point.max_upper_violation, per_unit - real - allowance);
            point.sup_gap = std::max(point.sup_gap, std::abs(per_unit - real));
        }
        point.max_lower_violation = std::max(point.max_lower_violation, 0.0);
        point.max_upper_violation = std::max(point.max_upper_violation, 0.0);
        report.max_lower_violation = std::max(report.max_lower_violation, point.max_lower_violation);
        report.max_upper_violation = std::max(report.max_upper_violation, point.max_upper_violation);
        report.per_n.push_back(point);
    }
    return report;
}

}  // namespace inthedge
