#include "inthedge/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

namespace inthedge {

HedgeSource exact_source(PricingTable table) {
    auto shared = std::make_shared<const PricingTable>(std::move(table));
    HedgeSource src;
    src.model = shared->model;
    src.n_units = shared->n_units;
    src.initial_price = [shared](double s) { return shared->prices.front()(s); };
    src.position = [shared](std::size_t t, double s) { return shared->strategies.at(t)(s); };
    src.terminal_payoff = [shared](double s) { return shared->prices.back()(s); };
    return src;
}

HedgeSource grid_source(GridTable table) {
    auto shared = std::make_shared<const GridTable>(std::move(table));
    HedgeSource src;
    src.model = shared->model;
    src.n_units = shared->n_units;
    src.initial_price = [shared](double s) {
        return interpolate_row(shared->prices.front(), shared->step, s);
    };
    src.position = [shared](std::size_t t, double s) {
        const auto& row = shared->positions.at(t);
        const auto node = static_cast<std::size_t>(
            std::max<long long>(0, std::llround(s / shared->step)));
        return row[std::min(node, row.size() - 1)];
    };
    src.terminal_payoff = [shared](double s) {
        return interpolate_row(shared->prices.back(), shared->step, s);
    };
    return src;
}

PathRecord replay(const HedgeSource& source, const PricePath& path) {
    const std::size_t horizon = source.model.horizon();
    if (path.size() != horizon + 1)
        throw InputError("path has " + std::to_string(path.size()) +
                         " observations but the table expects " + std::to_string(horizon + 1));

    PathRecord rec;
    rec.initial_price = source.initial_price(path.prices.front());
    double wealth = rec.initial_price;
    for (std::size_t t = 0; t < horizon; ++t) {
        const double s_now = path.prices[t];
        const double s_next = path.prices[t + 1];
        const int theta = source.position(t, s_now);
        wealth += theta * (s_next - s_now);
        const double ratio = s_next / s_now;
        if (!rec.support_breach &&
            (ratio < source.model.k_down[t] || ratio > source.model.k_up[t])) {
            rec.support_breach = true;
            rec.first_breach_step = t;
        }
    }
    rec.terminal_wealth = wealth;
    rec.terminal_spot = path.prices.back();
    rec.payoff = source.terminal_payoff(rec.terminal_spot);
    rec.relative_error = 100.0 * (rec.terminal_wealth - rec.payoff) / rec.terminal_spot;
    return rec;
}

PathRecord replay(const PricingTable& table, const PricePath& path) {
    return replay(exact_source(table), path);
}

namespace {

void accumulate(GroupStats& g, double err) {
    if (g.count == 0) {
        g.min = err;
        g.max = err;
    } else {
        g.min = std::min(g.min, err);
        g.max = std::max(g.max, err);
    }
    g.mean += err;
    ++g.count;
}

void finalize(GroupStats& g) {
    if (g.count > 0) g.mean /= static_cast<double>(g.count);
}

}  // namespace

BacktestReport run_backtest(const HedgeSource& source, const TrainingSet& test,
                            std::size_t bins) {
    if (bins < 1) throw InputError("histogram needs at least one bin");

    BacktestReport report;
    report.paths.reserve(test.periods.size());
    for (const PricePath& period : test.periods) report.paths.push_back(replay(source, period));

    std::vector<double> in_support_errors;
    for (const PathRecord& rec : report.paths) {
        accumulate(report.all, rec.relative_error);
        if (rec.support_breach) {
            accumulate(report.breached, rec.relative_error);
        } else {
            accumulate(report.in_support, rec.relative_error);
            in_support_errors.push_back(rec.relative_error);
        }
    }
    finalize(report.all);
    finalize(report.in_support);
    finalize(report.breached);

    if (!in_support_errors.empty()) {
        double lo = report.in_support.min;
        double hi = report.in_support.max;
        if (!(hi > lo)) {
            // All errors identical: center a unit-wide histogram on them.
            lo -= 0.5;
            hi += 0.5;
        }
        const double width = (hi - lo) / static_cast<double>(bins);
        report.histogram.resize(bins);
        for (std::size_t b = 0; b < bins; ++b)
            report.histogram[b] =
                HistogramBin{lo + width * static_cast<double>(b),
                             lo + width * static_cast<double>(b + 1), 0};
        report.histogram.back().right = hi;
        for (double err : in_support_errors) {
            auto b = err >= hi ? bins - 1
                               : static_cast<std::size_t>((err - lo) / width);
            ++report.histogram[std::min(b, bins - 1)].count;
        }
    }
    return report;
}

BacktestReport run_backtest(const PricingTable& table, const TrainingSet& test,
                            std::size_t bins) {
    return run_backtest(exact_source(table), test, bins);
}

void write_histogram_csv(const std::vector<HistogramBin>& bins,
                         const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw InputError("cannot write " + file.string());
    out << "bin_left,bin_right,count\n";
    char left[40];
    char right[40];
    for (const HistogramBin& bin : bins) {
        std::snprintf(left, sizeof left, "%.17g", bin.left);
        std::snprintf(right, sizeof right, "%.17g", bin.right);
        out << left << ',' << right << ',' << bin.count << '\n';
    }
    if (!out) throw InputError("failed writing " + file.string());
}

}  // namespace inthedge
