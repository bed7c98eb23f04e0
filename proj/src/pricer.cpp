#include "inthedge/pricer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <utility>

namespace inthedge {

namespace {

constexpr double kThetaCap = 1e9;  // hedge positions beyond this overflow int

std::size_t locate_step(const std::vector<double>& breakpoints, double x) {
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
    return static_cast<std::size_t>(it - breakpoints.begin()) - 1;
}

void validate_spot(double s) {
    if (!(s > 0.0) || !std::isfinite(s))
        throw InputError("spot must be positive and finite");
}

// Adds the linear term extra_slope * x to every piece; breakpoints unchanged.
PiecewiseAffine add_linear(const PiecewiseAffine& f, double extra_slope) {
    std::vector<Affine> pieces;
    pieces.reserve(f.piece_count());
    for (const Affine& p : f.pieces())
        pieces.push_back(Affine{p.slope + extra_slope, p.intercept});
    return PiecewiseAffine(f.breakpoints(), std::move(pieces));
}

// Interior knots of g and the spot intervals on which each knot lies inside
// the support window [k_down * s, k_up * s]. Shared across all positions.
struct KnotWindows {
    std::vector<double> knot;    // interior breakpoints a_j of g
    std::vector<double> value;   // g(a_j)
    std::vector<double> enter;   // knot j is in the window from enter[j] ...
    std::vector<double> leave;   // ... until leave[j]; both ascending in j
    std::vector<double> bounds;  // sorted, deduplicated union of enter and leave
};

KnotWindows knot_windows(const PiecewiseAffine& g, double k_down, double k_up) {
    KnotWindows w;
    for (std::size_t j = 1; j < g.piece_count(); ++j) {
        const double a = g.breakpoints()[j];
        w.knot.push_back(a);
        w.value.push_back(g.pieces()[j](a));
        w.enter.push_back(a / k_up);
        w.leave.push_back(a / k_down);
    }
    w.bounds.reserve(2 * w.knot.size());
    w.bounds.insert(w.bounds.end(), w.enter.begin(), w.enter.end());
    w.bounds.insert(w.bounds.end(), w.leave.begin(), w.leave.end());
    std::sort(w.bounds.begin(), w.bounds.end());
    w.bounds.erase(std::unique(w.bounds.begin(), w.bounds.end()), w.bounds.end());
    return w;
}

// Piecewise-constant-plus-theta*s curve tracking the best in-window knot:
// on each interval the strongest active knot contributes g(a_j) - theta * a_j,
// maintained with a sliding-window max deque. Intervals with no knot in the
// window stay uncovered; the endpoint curves always cover them.
PartialCurve knot_curve(const KnotWindows& w, double theta) {
    PartialCurve curve;
    curve.breakpoints.push_back(0.0);
    curve.pieces.push_back(std::nullopt);
    if (w.knot.empty()) return curve;

    std::vector<double> phi(w.knot.size());
    for (std::size_t j = 0; j < w.knot.size(); ++j) phi[j] = w.value[j] - theta * w.knot[j];

    std::deque<std::size_t> best;  // knot indices, phi strictly decreasing
    std::size_t arriving = 0;
    for (double u : w.bounds) {
        while (arriving < w.knot.size() && w.enter[arriving] <= u) {
            while (!best.empty() && phi[best.back()] <= phi[arriving]) best.pop_back();
            best.push_back(arriving);
            ++arriving;
        }
        while (!best.empty() && w.leave[best.front()] <= u) best.pop_front();
        curve.breakpoints.push_back(u);
        if (best.empty())
            curve.pieces.push_back(std::nullopt);
        else
            curve.pieces.push_back(Affine{theta, phi[best.front()]});
    }
    return curve;
}

}  // namespace

void validate_step_bounds(double k_down, double k_up) {
    if (!std::isfinite(k_down) || !std::isfinite(k_up) || !(k_down > 0.0) || !(k_down < 1.0) ||
        !(k_up > 1.0))
        throw InputError("support bounds must satisfy 0 < k_down < 1 < k_up");
}

SupportModel::SupportModel(std::vector<double> down, std::vector<double> up)
    : k_down(std::move(down)), k_up(std::move(up)) {
    if (k_down.size() != k_up.size())
        throw InputError("support model needs one (k_down, k_up) pair per step");
    for (std::size_t t = 0; t < k_down.size(); ++t) validate_step_bounds(k_down[t], k_up[t]);
}

SupportModel SupportModel::uniform(double down, double up, std::size_t horizon) {
    validate_step_bounds(down, up);
    return SupportModel(std::vector<double>(horizon, down), std::vector<double>(horizon, up));
}

IntegerStepFunction::IntegerStepFunction(std::vector<double> breakpoints, std::vector<int> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (breakpoints_.empty() || breakpoints_.size() != values_.size())
        throw InputError("step function needs one value per breakpoint");
    if (breakpoints_.front() != 0.0)
        throw InputError("step function must start at x = 0");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
        if (!std::isfinite(breakpoints_[i]) || !(breakpoints_[i] > breakpoints_[i - 1]))
            throw InputError("step function breakpoints must be strictly increasing");
    }
    std::size_t out = 1;
    for (std::size_t i = 1; i < values_.size(); ++i) {
        if (values_[i] == values_[out - 1]) continue;
        breakpoints_[out] = breakpoints_[i];
        values_[out] = values_[i];
        ++out;
    }
    breakpoints_.resize(out);
    values_.resize(out);
}

int IntegerStepFunction::operator()(double x) const {
    if (!std::isfinite(x) || x < 0.0)
        throw InputError("step function eval: x must be finite and nonnegative");
    return values_[locate_step(breakpoints_, x)];
}

double clamped_knot(double a, double s, double k_down, double k_up) {
    validate_step_bounds(k_down, k_up);
    validate_spot(s);
    if (std::isnan(a)) throw InputError("clamped_knot: knot must not be NaN");
    return std::clamp(a, k_down * s, k_up * s);
}

ThetaRange theta_range(const PiecewiseAffine& g_next) {
    const double L = g_next.lipschitz();
    if (L + 1.0 > kThetaCap) throw InputError("theta_range: slopes too large for integer hedges");
    return ThetaRange{static_cast<int>(std::ceil(-L - 1.0)), static_cast<int>(std::floor(L + 1.0))};
}

double one_step_value(const PiecewiseAffine& g_next, double k_down, double k_up, double s,
                      int theta) {
    validate_step_bounds(k_down, k_up);
    validate_spot(s);
    const double lo = k_down * s;
    const double hi = k_up * s;
    // The payoff of holding theta is affine between knots, so the supremum over
    // the window is attained at a clamped knot or a window endpoint.
    double best = -std::numeric_limits<double>::infinity();
    const auto consider = [&](double x) {
        best = std::max(best, g_next(x) - theta * x);
    };
    consider(lo);
    consider(hi);
    for (std::size_t j = 1; j < g_next.piece_count(); ++j) {
        const double a = g_next.breakpoints()[j];
        if (a > lo && a < hi) consider(a);
    }
    return best + theta * s;
}

OneStepOptimal one_step_optimal(const PiecewiseAffine& g_next, double k_down, double k_up,
                                double s) {
    const ThetaRange range = theta_range(g_next);
    OneStepOptimal out{std::numeric_limits<double>::infinity(), range.lo};
    for (int theta = range.lo; theta <= range.hi; ++theta) {
        const double v = one_step_value(g_next, k_down, k_up, s, theta);
        if (v < out.value) {
            out.value = v;
            out.theta_star = theta;
        }
    }
    return out;
}

OneStepFunction one_step_function(const PiecewiseAffine& g_next, double k_down, double k_up) {
    validate_step_bounds(k_down, k_up);
    const ThetaRange range = theta_range(g_next);
    const KnotWindows windows = knot_windows(g_next, k_down, k_up);

    // Cost of holding theta, as a function of the spot: the best of the two
    // window-endpoint candidates and the best in-window knot, plus theta * s.
    std::vector<PiecewiseAffine> by_theta;
    by_theta.reserve(static_cast<std::size_t>(range.hi - range.lo) + 1);
    for (int theta = range.lo; theta <= range.hi; ++theta) {
        const PiecewiseAffine detached = add_linear(g_next, -static_cast<double>(theta));
        const PiecewiseAffine at_down = add_linear(affine_image(detached, k_down, 1.0, 0.0), theta);
        const PiecewiseAffine at_up = add_linear(affine_image(detached, k_up, 1.0, 0.0), theta);
        const PartialCurve curves[] = {to_partial(at_down), to_partial(at_up),
                                       knot_curve(windows, theta)};
        EnvelopeResult sup = upper_envelope(curves);
        by_theta.emplace_back(std::move(sup.breakpoints), std::move(sup.pieces));
    }

    std::vector<PartialCurve> candidates;
    candidates.reserve(by_theta.size());
    for (const PiecewiseAffine& v : by_theta) candidates.push_back(to_partial(v));
    EnvelopeResult env = lower_envelope(candidates);

    std::vector<int> thetas;
    thetas.reserve(env.winner.size());
    for (int w : env.winner) thetas.push_back(range.lo + w);

    return OneStepFunction{PiecewiseAffine(env.breakpoints, env.pieces),
                           IntegerStepFunction(std::move(env.breakpoints), std::move(thetas))};
}

PricingTable backward_price(const PiecewiseAffine& payoff, int n_units,
                            const SupportModel& model) {
    if (n_units < 1) throw InputError("backward_price: need at least one unit");
    const std::size_t horizon = model.horizon();

    PricingTable table;
    table.n_units = n_units;
    table.model = model;
    table.prices.resize(horizon + 1);
    table.prices[horizon] = scale(payoff, static_cast<double>(n_units));
    table.strategies.reserve(horizon);

    std::vector<IntegerStepFunction> reversed;
    reversed.reserve(horizon);
    for (std::size_t t = horizon; t-- > 0;) {
        OneStepFunction step = one_step_function(table.prices[t + 1], model.k_down[t], model.k_up[t]);
        table.prices[t] = std::move(step.g_prev);
        reversed.push_back(std::move(step.theta_star));
    }
    for (std::size_t t = reversed.size(); t-- > 0;) table.strategies.push_back(std::move(reversed[t]));
    return table;
}

}  // namespace inthedge
