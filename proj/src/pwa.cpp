#include "inthedge/pwa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace inthedge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Breakpoints closer than this (relative) are treated as one boundary.
bool same_boundary(double a, double b) {
    return std::abs(a - b) <= kParallelTol * std::max({1.0, std::abs(a), std::abs(b)});
}

bool same_slope(double a, double b) {
    return std::abs(a - b) <= kParallelTol * std::max({1.0, std::abs(a), std::abs(b)});
}

std::size_t locate(const std::vector<double>& breakpoints, double x) {
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
    return static_cast<std::size_t>(it - breakpoints.begin()) - 1;
}

}  // namespace

PiecewiseAffine::PiecewiseAffine() : breakpoints_{0.0}, pieces_{Affine{}} {}

PiecewiseAffine::PiecewiseAffine(std::vector<double> breakpoints, std::vector<Affine> pieces)
    : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
    canonicalize();
}

void PiecewiseAffine::canonicalize() {
    if (breakpoints_.empty() || breakpoints_.size() != pieces_.size())
        throw InputError("piecewise function needs one piece per breakpoint");
    if (breakpoints_.front() == 0.0)
        breakpoints_.front() = 0.0;  // normalize -0.0
    if (breakpoints_.front() != 0.0)
        throw InputError("piecewise function must start at x = 0");
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        if (!std::isfinite(breakpoints_[i]))
            throw InputError("breakpoints must be finite");
        if (!std::isfinite(pieces_[i].slope) || !std::isfinite(pieces_[i].intercept))
            throw InputError("piece coefficients must be finite");
    }

    // Collapse runs of breakpoints within the boundary tolerance: such slivers
    // arise when two algebraic routes to the same knot disagree at ulp level,
    // and the rightmost piece of a run is the one that continues past it.
    {
        std::size_t out = 0;
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            if (out > 0 && same_boundary(breakpoints_[out - 1], breakpoints_[i])) {
                pieces_[out - 1] = pieces_[i];
                continue;
            }
            if (out > 0 && !(breakpoints_[i] > breakpoints_[out - 1]))
                throw InputError("breakpoints must be strictly increasing");
            breakpoints_[out] = breakpoints_[i];
            pieces_[out] = pieces_[i];
            ++out;
        }
        breakpoints_.resize(out);
        pieces_.resize(out);
    }

    // Continuity: snap sub-tolerance gaps exactly onto the left piece, reject the rest.
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
        const double b = breakpoints_[i];
        const double left = pieces_[i - 1](b);
        const double right = pieces_[i](b);
        const double gap = right - left;
        if (gap == 0.0) continue;
        if (std::abs(gap) <= kValueTol * std::max({1.0, std::abs(left), std::abs(right)})) {
            pieces_[i].intercept = left - pieces_[i].slope * b;
        } else {
            throw InvariantError("discontinuity at breakpoint " + std::to_string(b));
        }
    }

    // Merge adjacent pieces that are the same line (continuity already holds).
    std::size_t out = 1;
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
        if (same_slope(pieces_[out - 1].slope, pieces_[i].slope)) continue;
        breakpoints_[out] = breakpoints_[i];
        pieces_[out] = pieces_[i];
        ++out;
    }
    breakpoints_.resize(out);
    pieces_.resize(out);
}

PiecewiseAffine PiecewiseAffine::from_knots(std::span<const std::pair<double, double>> knots,
                                            double final_slope) {
    if (knots.empty()) throw InputError("from_knots: need at least one knot");
    if (knots.front().first != 0.0) throw InputError("from_knots: first knot must sit at x = 0");
    std::vector<double> bps;
    std::vector<Affine> pieces;
    bps.reserve(knots.size());
    pieces.reserve(knots.size());
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const auto [x0, y0] = knots[i];
        const auto [x1, y1] = knots[i + 1];
        if (!(x1 > x0)) throw InputError("from_knots: knot x values must be strictly increasing");
        if (x1 - x0 <= kParallelTol * std::max({1.0, std::abs(x0), std::abs(x1)}))
            throw InputError("from_knots: knots closer than the boundary tolerance");
        const double slope = (y1 - y0) / (x1 - x0);
        bps.push_back(x0);
        pieces.push_back(Affine{slope, y0 - slope * x0});
    }
    const auto [xl, yl] = knots.back();
    bps.push_back(xl);
    pieces.push_back(Affine{final_slope, yl - final_slope * xl});
    return PiecewiseAffine(std::move(bps), std::move(pieces));
}

PiecewiseAffine PiecewiseAffine::constant(double value) {
    return PiecewiseAffine({0.0}, {Affine{0.0, value}});
}

PiecewiseAffine PiecewiseAffine::call_payoff(double strike) {
    if (!(strike > 0.0) || !std::isfinite(strike))
        throw InputError("call_payoff: strike must be positive and finite");
    return PiecewiseAffine({0.0, strike}, {Affine{0.0, 0.0}, Affine{1.0, -strike}});
}

PiecewiseAffine PiecewiseAffine::put_payoff(double strike) {
    if (!(strike > 0.0) || !std::isfinite(strike))
        throw InputError("put_payoff: strike must be positive and finite");
    return PiecewiseAffine({0.0, strike}, {Affine{-1.0, strike}, Affine{0.0, 0.0}});
}

double PiecewiseAffine::operator()(double x) const {
    if (!std::isfinite(x) || x < 0.0)
        throw InputError("piecewise eval: x must be finite and nonnegative");
    return pieces_[locate(breakpoints_, x)](x);
}

std::size_t PiecewiseAffine::piece_index(double x) const {
    if (!std::isfinite(x) || x < 0.0)
        throw InputError("piece_index: x must be finite and nonnegative");
    return locate(breakpoints_, x);
}

double PiecewiseAffine::lipschitz() const {
    double best = 0.0;
    for (const Affine& p : pieces_) best = std::max(best, std::abs(p.slope));
    return best;
}

bool structurally_close(const PiecewiseAffine& f, const PiecewiseAffine& g, double tol) {
    if (f.piece_count() != g.piece_count()) return false;
    for (std::size_t i = 0; i < f.piece_count(); ++i) {
        const double bf = f.breakpoints()[i];
        const double bg = g.breakpoints()[i];
        if (std::abs(bf - bg) > tol * std::max({1.0, std::abs(bf), std::abs(bg)})) return false;
        if (std::abs(f.pieces()[i].slope - g.pieces()[i].slope) >
            tol * std::max({1.0, std::abs(f.pieces()[i].slope), std::abs(g.pieces()[i].slope)}))
            return false;
        const double vf = f.pieces()[i](bf);
        const double vg = g.pieces()[i](bg);
        if (std::abs(vf - vg) > tol * std::max({1.0, std::abs(vf), std::abs(vg)})) return false;
    }
    return true;
}

PartialCurve to_partial(const PiecewiseAffine& f) {
    PartialCurve out;
    out.breakpoints = f.breakpoints();
    out.pieces.assign(f.pieces().begin(), f.pieces().end());
    return out;
}

namespace {

struct ActiveLine {
    int curve = -1;
    Affine line;
};

void validate_partial(const PartialCurve& c) {
    if (c.breakpoints.empty() || c.breakpoints.size() != c.pieces.size())
        throw InputError("envelope: curve needs one piece per breakpoint");
    if (c.breakpoints.front() != 0.0)
        throw InputError("envelope: curve must start at x = 0");
    for (std::size_t i = 0; i < c.breakpoints.size(); ++i) {
        if (!std::isfinite(c.breakpoints[i]))
            throw InputError("envelope: breakpoints must be finite");
        if (i > 0 && !(c.breakpoints[i] > c.breakpoints[i - 1]))
            throw InputError("envelope: breakpoints must be strictly increasing");
        if (c.pieces[i] &&
            (!std::isfinite(c.pieces[i]->slope) || !std::isfinite(c.pieces[i]->intercept)))
            throw InputError("envelope: piece coefficients must be finite");
    }
}

}  // namespace

EnvelopeResult upper_envelope(std::span<const PartialCurve> curves) {
    if (curves.empty()) throw InputError("envelope: need at least one curve");
    for (const PartialCurve& c : curves) validate_partial(c);

    // Base boundaries: union of all curves' breakpoints.
    std::vector<double> bounds;
    for (const PartialCurve& c : curves)
        bounds.insert(bounds.end(), c.breakpoints.begin(), c.breakpoints.end());
    std::sort(bounds.begin(), bounds.end());
    std::vector<double> base;
    base.reserve(bounds.size());
    for (double b : bounds) {
        if (base.empty() || !same_boundary(base.back(), b)) base.push_back(b);
    }

    EnvelopeResult res;
    std::vector<std::size_t> cursors(curves.size(), 0);
    std::vector<ActiveLine> active;
    active.reserve(curves.size());

    for (std::size_t k = 0; k < base.size(); ++k) {
        const double u = base[k];
        const double v = (k + 1 < base.size()) ? base[k + 1] : kInf;

        active.clear();
        for (std::size_t ci = 0; ci < curves.size(); ++ci) {
            const auto& bps = curves[ci].breakpoints;
            std::size_t& cur = cursors[ci];
            while (cur + 1 < bps.size() && (bps[cur + 1] <= u || same_boundary(bps[cur + 1], u)))
                ++cur;
            if (curves[ci].pieces[cur])
                active.push_back(ActiveLine{static_cast<int>(ci), *curves[ci].pieces[cur]});
        }
        if (active.empty())
            throw InvariantError("envelope: no curve covers x = " + std::to_string(u));

        // Walk the interval [u, v): re-select the winner at the current x and
        // hop to the earliest strictly-overtaking crossing. Selection is
        // tolerant: among lines within a whisker of the maximum the strictly
        // steeper one wins (it dominates immediately to the right), and fully
        // tied lines keep the smallest curve index. The whisker sits well
        // below the continuity-snap tolerance, so the piece seams it can
        // introduce are always snappable.
        double x = u;
        while (true) {
            std::size_t w = 0;
            double vw = active[0].line(x);
            for (std::size_t j = 1; j < active.size(); ++j) {
                const double vj = active[j].line(x);
                const double tol =
                    0.25 * kValueTol * std::max({1.0, std::abs(vw), std::abs(vj)});
                const double slope_gap =
                    kParallelTol * std::max({1.0, std::abs(active[j].line.slope),
                                             std::abs(active[w].line.slope)});
                if (vj > vw + tol ||
                    (vj >= vw - tol &&
                     active[j].line.slope > active[w].line.slope + slope_gap)) {
                    w = j;
                    vw = vj;
                }
            }
            double cross = v;
            bool found = false;
            for (std::size_t j = 0; j < active.size(); ++j) {
                if (j == w) continue;
                const double dm = active[j].line.slope - active[w].line.slope;
                if (dm <= kParallelTol * std::max({1.0, std::abs(active[j].line.slope),
                                                   std::abs(active[w].line.slope)}))
                    continue;
                const double xc = (active[w].line.intercept - active[j].line.intercept) / dm;
                if (xc <= x || xc >= cross) continue;
                cross = xc;
                found = true;
            }
            res.breakpoints.push_back(x);
            res.pieces.push_back(active[w].line);
            res.winner.push_back(active[w].curve);
            if (!found) break;
            x = cross;
        }
    }
    return res;
}

EnvelopeResult lower_envelope(std::span<const PartialCurve> curves) {
    std::vector<PartialCurve> flipped(curves.begin(), curves.end());
    for (PartialCurve& c : flipped) {
        for (auto& p : c.pieces) {
            if (p) *p = Affine{-p->slope, -p->intercept};
        }
    }
    EnvelopeResult res = upper_envelope(flipped);
    for (Affine& p : res.pieces) p = Affine{-p.slope, -p.intercept};
    return res;
}

PiecewiseAffine pointwise_max(std::span<const PiecewiseAffine> fs) {
    if (fs.empty()) throw InputError("pointwise_max: need at least one function");
    std::vector<PartialCurve> curves;
    curves.reserve(fs.size());
    for (const PiecewiseAffine& f : fs) curves.push_back(to_partial(f));
    EnvelopeResult res = upper_envelope(curves);
    return PiecewiseAffine(std::move(res.breakpoints), std::move(res.pieces));
}

PiecewiseAffine pointwise_min(std::span<const PiecewiseAffine> fs) {
    if (fs.empty()) throw InputError("pointwise_min: need at least one function");
    std::vector<PartialCurve> curves;
    curves.reserve(fs.size());
    for (const PiecewiseAffine& f : fs) curves.push_back(to_partial(f));
    EnvelopeResult res = lower_envelope(curves);
    return PiecewiseAffine(std::move(res.breakpoints), std::move(res.pieces));
}

PiecewiseAffine pointwise_max(const PiecewiseAffine& f, const PiecewiseAffine& g) {
    const PiecewiseAffine fs[] = {f, g};
    return pointwise_max(std::span<const PiecewiseAffine>(fs));
}

PiecewiseAffine pointwise_min(const PiecewiseAffine& f, const PiecewiseAffine& g) {
    const PiecewiseAffine fs[] = {f, g};
    return pointwise_min(std::span<const PiecewiseAffine>(fs));
}

PiecewiseAffine affine_image(const PiecewiseAffine& f, double a, double c, double d) {
    if (!(a > 0.0) || !std::isfinite(a))
        throw InputError("affine_image: inner scale a must be positive and finite");
    if (!std::isfinite(c) || !std::isfinite(d))
        throw InputError("affine_image: coefficients must be finite");
    std::vector<double> bps;
    std::vector<Affine> pieces;
    bps.reserve(f.piece_count());
    pieces.reserve(f.piece_count());
    for (std::size_t i = 0; i < f.piece_count(); ++i) {
        // b / a keeps b unchanged when a == 1; scaled breakpoints that land on
        // one another (sub-ulp spacing) merge in the constructor.
        const double b = (a == 1.0) ? f.breakpoints()[i] : f.breakpoints()[i] / a;
        const Affine& p = f.pieces()[i];
        pieces.push_back(Affine{c * p.slope * a, c * p.intercept + d});
        bps.push_back(b);
    }
    return PiecewiseAffine(std::move(bps), std::move(pieces));
}

PiecewiseAffine scale(const PiecewiseAffine& f, double c) {
    if (!std::isfinite(c)) throw InputError("scale: factor must be finite");
    std::vector<Affine> pieces;
    pieces.reserve(f.piece_count());
    for (const Affine& p : f.pieces()) pieces.push_back(Affine{c * p.slope, c * p.intercept});
    return PiecewiseAffine(f.breakpoints(), std::move(pieces));
}

PiecewiseAffine add(const PiecewiseAffine& f, const PiecewiseAffine& g) {
    std::vector<double> bps;
    std::vector<Affine> pieces;
    bps.reserve(f.piece_count() + g.piece_count());
    pieces.reserve(f.piece_count() + g.piece_count());
    std::size_t i = 0, j = 0;
    double x = 0.0;
    while (true) {
        pieces.push_back(Affine{f.pieces()[i].slope + g.pieces()[j].slope,
                                f.pieces()[i].intercept + g.pieces()[j].intercept});
        bps.push_back(x);
        const double nf = (i + 1 < f.piece_count()) ? f.breakpoints()[i + 1] : kInf;
        const double ng = (j + 1 < g.piece_count()) ? g.breakpoints()[j + 1] : kInf;
        const double nx = std::min(nf, ng);
        if (nx == kInf) break;
        if (nf == nx) ++i;
        if (ng == nx) ++j;
        x = nx;
    }
    return PiecewiseAffine(std::move(bps), std::move(pieces));
}

}  // namespace inthedge
