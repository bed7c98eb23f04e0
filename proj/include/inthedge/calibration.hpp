#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "inthedge/common.hpp"
#include "inthedge/pricer.hpp"

namespace inthedge {

// One observed price series. Dates are ISO-8601 strings (YYYY-MM-DD), which
// order lexicographically exactly as they do chronologically.
struct PricePath {
    std::vector<std::string> dates;
    std::vector<double> prices;

    PricePath(std::vector<std::string> dates_in, std::vector<double> prices_in);

    std::size_t size() const { return prices.size(); }
};

// A bundle of equally long price paths used to estimate support bounds.
struct TrainingSet {
    std::vector<PricePath> periods;

    explicit TrainingSet(std::vector<PricePath> periods_in);

    // Observations per period, T + 1.
    std::size_t period_length() const { return periods.front().size(); }
    std::size_t horizon() const { return period_length() - 1; }
};

enum class CalibrationMode { per_step, pooled };

std::string to_string(CalibrationMode mode);
CalibrationMode parse_calibration_mode(const std::string& name);

struct CalibratedModel {
    SupportModel model;
    // Steps whose raw extremum violated 0 < k_down < 1 < k_up and was nudged.
    std::vector<std::size_t> adjusted_steps;
    CalibrationMode mode;
    double epsilon;
};

// Per-step mode takes the extreme one-step ratios separately for each step;
// pooled mode shares the global extrema across all steps. Raw bounds on the
// wrong side of 1 are replaced by 1 -/+ epsilon unless strict, which throws.
CalibratedModel calibrate(const TrainingSet& train, CalibrationMode mode,
                          double epsilon = 1e-4, bool strict = false);

struct TrainTestSplit {
    TrainingSet train;
    TrainingSet test;
};

// Consecutive disjoint windows of period_length points, earliest first;
// the trailing remainder that cannot fill a window is dropped.
TrainingSet cut_into_periods(const PricePath& full, std::size_t period_length);

// Cuts the series into consecutive disjoint windows of period_length points
// (trailing remainder dropped), sending the earliest floor(W * fraction)
// windows to train and the rest to test. Either side empty is an error.
TrainTestSplit split_train_test(const PricePath& full, std::size_t period_length,
                                double train_fraction);

// CSV with header "date,price"; errors name the offending row.
PricePath read_price_csv(const std::filesystem::path& file);
void write_price_csv(const PricePath& path, const std::filesystem::path& file);

}  // namespace inthedge
