#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace inthedge {

// Raised when caller-supplied data (arguments, files, CLI flags) is invalid.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an internal consistency check fails; indicates a bug, not bad input.
class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

// Value comparisons are absolute below 1 and relative above: tol(v) = 1e-9 * max(1, |v|).
inline constexpr double kValueTol = 1e-9;

// Two affine pieces whose slopes differ by less than this (relative) are treated as parallel.
inline constexpr double kParallelTol = 1e-12;

inline double value_tol(double scale) {
    return kValueTol * std::max(1.0, std::abs(scale));
}

inline bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= kValueTol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace inthedge
