#include "inthedge/calibration.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace inthedge {

namespace {

bool valid_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    const int y = std::stoi(s.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
    return std::chrono::year_month_day(std::chrono::year(y), std::chrono::month(m),
                                       std::chrono::day(d))
        .ok();
}

}  // namespace

PricePath::PricePath(std::vector<std::string> dates_in, std::vector<double> prices_in)
    : dates(std::move(dates_in)), prices(std::move(prices_in)) {
    if (prices.empty()) throw InputError("price path is empty");
    if (dates.size() != prices.size())
        throw InputError("price path has " + std::to_string(dates.size()) + " dates but " +
                         std::to_string(prices.size()) + " prices");
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (!valid_iso_date(dates[i]))
            throw InputError("invalid date '" + dates[i] + "' at observation " +
                             std::to_string(i));
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i]))
            throw InputError("nonpositive price at observation " + std::to_string(i));
        if (i > 0 && dates[i] <= dates[i - 1])
            throw InputError("dates not strictly increasing at observation " +
                             std::to_string(i));
    }
}

TrainingSet::TrainingSet(std::vector<PricePath> periods_in) : periods(std::move(periods_in)) {
    if (periods.empty()) throw InputError("training set has no periods");
    const std::size_t len = periods.front().size();
    if (len < 2) throw InputError("training periods need at least 2 observations");
    for (const PricePath& p : periods)
        if (p.size() != len) throw InputError("training periods have unequal lengths");
}

std::string to_string(CalibrationMode mode) {
    return mode == CalibrationMode::per_step ? "per_step" : "pooled";
}

CalibrationMode parse_calibration_mode(const std::string& name) {
    if (name == "per_step") return CalibrationMode::per_step;
    if (name == "pooled") return CalibrationMode::pooled;
    throw InputError("unknown calibration mode '" + name + "'");
}

CalibratedModel calibrate(const TrainingSet& train, CalibrationMode mode, double epsilon,
                          bool strict) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0))
        throw InputError("epsilon must lie in (0, 1)");
    const std::size_t horizon = train.horizon();

    std::vector<double> lo(horizon, std::numeric_limits<double>::infinity());
    std::vector<double> hi(horizon, -std::numeric_limits<double>::infinity());
    for (const PricePath& period : train.periods) {
        for (std::size_t t = 0; t < horizon; ++t) {
            const double ratio = period.prices[t + 1] / period.prices[t];
            lo[t] = std::min(lo[t], ratio);
            hi[t] = std::max(hi[t], ratio);
        }
    }
    if (mode == CalibrationMode::pooled) {
        const double pool_lo = *std::min_element(lo.begin(), lo.end());
        const double pool_hi = *std::max_element(hi.begin(), hi.end());
        std::fill(lo.begin(), lo.end(), pool_lo);
        std::fill(hi.begin(), hi.end(), pool_hi);
    }

    std::vector<std::size_t> adjusted;
    for (std::size_t t = 0; t < horizon; ++t) {
        bool touched = false;
        if (lo[t] >= 1.0) {
            if (strict)
                throw InputError("step " + std::to_string(t) +
                                 ": no observed down-move (k_down >= 1)");
            lo[t] = 1.0 - epsilon;
            touched = true;
        }
        if (hi[t] <= 1.0) {
            if (strict)
                throw InputError("step " + std::to_string(t) +
                                 ": no observed up-move (k_up <= 1)");
            hi[t] = 1.0 + epsilon;
            touched = true;
        }
        if (touched) adjusted.push_back(t);
    }

    return CalibratedModel{SupportModel(std::move(lo), std::move(hi)), std::move(adjusted),
                           mode, epsilon};
}

TrainingSet cut_into_periods(const PricePath& full, std::size_t period_length) {
    if (period_length < 2) throw InputError("period length must be at least 2");
    const std::size_t windows = full.size() / period_length;
    if (windows < 1)
        throw InputError("series has " + std::to_string(full.size()) +
                         " points, shorter than one period of " +
                         std::to_string(period_length));
    std::vector<PricePath> periods;
    periods.reserve(windows);
    for (std::size_t w = 0; w < windows; ++w) {
        const std::size_t begin = w * period_length;
        periods.emplace_back(
            std::vector<std::string>{full.dates.begin() + begin,
                                     full.dates.begin() + begin + period_length},
            std::vector<double>{full.prices.begin() + begin,
                                full.prices.begin() + begin + period_length});
    }
    return TrainingSet(std::move(periods));
}

TrainTestSplit split_train_test(const PricePath& full, std::size_t period_length,
                                double train_fraction) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw InputError("train fraction must lie in (0, 1)");
    const TrainingSet all = cut_into_periods(full, period_length);
    const std::size_t windows = all.periods.size();
    // The nudge shields exact-fraction requests like 2/3 from representation noise.
    const auto train_count = static_cast<std::size_t>(
        std::floor(static_cast<double>(windows) * train_fraction + 1e-9));
    if (train_count < 1 || windows - train_count < 1)
        throw InputError("not enough data to form both a train and a test window");

    std::vector<PricePath> train_periods(all.periods.begin(),
                                         all.periods.begin() + train_count);
    std::vector<PricePath> test_periods(all.periods.begin() + train_count,
                                        all.periods.end());
    return TrainTestSplit{TrainingSet(std::move(train_periods)),
                          TrainingSet(std::move(test_periods))};
}

PricePath read_price_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw InputError(file.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,price")
        throw InputError(file.string() + ": expected header 'date,price', got '" + line + "'");

    std::vector<std::string> dates;
    std::vector<double> prices;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw InputError(file.string() + ": row " + std::to_string(row) +
                             " is not 'date,price'");
        const std::string date = line.substr(0, comma);
        const std::string num = line.substr(comma + 1);
        double price = 0.0;
        try {
            std::size_t used = 0;
            price = std::stod(num, &used);
            if (used != num.size()) throw std::invalid_argument(num);
        } catch (const std::exception&) {
            throw InputError(file.string() + ": row " + std::to_string(row) +
                             " has unparseable price '" + num + "'");
        }
        dates.push_back(date);
        prices.push_back(price);
    }
    try {
        return PricePath(std::move(dates), std::move(prices));
    } catch (const InputError& e) {
        throw InputError(file.string() + ": " + e.what());
    }
}

void write_price_csv(const PricePath& path, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw InputError("cannot write " + file.string());
    out << "date,price\n";
    char buf[64];
    for (std::size_t i = 0; i < path.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", path.prices[i]);
        out << path.dates[i] << ',' << buf << '\n';
    }
    if (!out) throw InputError("failed writing " + file.string());
}

}  // namespace inthedge
