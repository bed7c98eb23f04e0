#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "inthedge/common.hpp"

namespace inthedge {

// One affine piece y = slope * x + intercept.
struct Affine {
    double slope = 0.0;
    double intercept = 0.0;

    double operator()(double x) const { return slope * x + intercept; }
};

// Continuous piecewise-affine function on [0, +inf).
//
// Stored as breakpoints b_0 = 0 < b_1 < ... < b_{P-1} plus one Affine per piece;
// piece i applies on [b_i, b_{i+1}) and the last piece extends to +inf.
// The constructor canonicalizes: it validates the shape, collapses runs of
// breakpoints within the boundary tolerance (keeping the rightmost piece of a
// run), snaps sub-tolerance continuity gaps at interior breakpoints (rewriting
// the right piece's intercept so adjacent pieces agree exactly), rejects larger
// gaps, and merges adjacent pieces that are the same line. Canonical form makes
// serialization round-trips bit-exact and structural comparison meaningful.
class PiecewiseAffine {
public:
    // The zero function.
    PiecewiseAffine();

    PiecewiseAffine(std::vector<double> breakpoints, std::vector<Affine> pieces);

    // Interpolates the given (x, y) knots; first knot must sit at x = 0 and the
    // final piece continues from the last knot with final_slope.
    static PiecewiseAffine from_knots(std::span<const std::pair<double, double>> knots,
                                      double final_slope);
    static PiecewiseAffine constant(double value);
    static PiecewiseAffine call_payoff(double strike);
    static PiecewiseAffine put_payoff(double strike);

    double operator()(double x) const;

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<Affine>& pieces() const { return pieces_; }
    std::size_t piece_count() const { return pieces_.size(); }

    // Index of the piece whose half-open interval contains x (x >= 0).
    std::size_t piece_index(double x) const;

    // Largest absolute slope; this is the Lipschitz constant.
    double lipschitz() const;

private:
    void canonicalize();

    std::vector<double> breakpoints_;
    std::vector<Affine> pieces_;
};

// True when the two functions have the same piece structure up to tolerance:
// equal piece counts, breakpoints and slopes within tol, and matching values at
// every breakpoint.
bool structurally_close(const PiecewiseAffine& f, const PiecewiseAffine& g,
                        double tol = kValueTol);

// Exact pointwise maximum / minimum over one or more functions.
PiecewiseAffine pointwise_max(std::span<const PiecewiseAffine> fs);
PiecewiseAffine pointwise_min(std::span<const PiecewiseAffine> fs);
PiecewiseAffine pointwise_max(const PiecewiseAffine& f, const PiecewiseAffine& g);
PiecewiseAffine pointwise_min(const PiecewiseAffine& f, const PiecewiseAffine& g);

// x -> c * f(a * x) + d with a > 0. With a = 1, c = 1, d = 0 the result is f
// unchanged, coefficient for coefficient.
PiecewiseAffine affine_image(const PiecewiseAffine& f, double a, double c, double d);

PiecewiseAffine scale(const PiecewiseAffine& f, double c);
PiecewiseAffine add(const PiecewiseAffine& f, const PiecewiseAffine& g);

// A curve that competes in an envelope only where it is defined. Piece i covers
// [breakpoints[i], breakpoints[i+1]) (the last piece extends to +inf); nullopt
// marks an interval the curve does not cover at all.
struct PartialCurve {
    std::vector<double> breakpoints;
    std::vector<std::optional<Affine>> pieces;
};

PartialCurve to_partial(const PiecewiseAffine& f);

// Raw (un-merged) envelope decomposition. winner[i] is the index of the input
// curve attaining the envelope on piece i; ties go to the smallest index.
struct EnvelopeResult {
    std::vector<double> breakpoints;
    std::vector<Affine> pieces;
    std::vector<int> winner;
};

// Upper / lower envelope of partially-defined curves. Every x >= 0 must be
// covered by at least one curve; a gap raises InvariantError.
EnvelopeResult upper_envelope(std::span<const PartialCurve> curves);
EnvelopeResult lower_envelope(std::span<const PartialCurve> curves);

}  // namespace inthedge
