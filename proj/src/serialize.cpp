#include "inthedge/serialize.hpp"

#include <fstream>
#include <string>
#include <utility>

namespace inthedge {

namespace {

using nlohmann::json;

// Maps schema violations (missing keys, wrong types) onto InputError so every
// malformed document fails the same way regardless of which field is broken.
template <typename Fn>
auto parse_guard(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw InputError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

json to_json(const PiecewiseAffine& f) {
    json j;
    j["breakpoints"] = f.breakpoints();
    json slopes = json::array();
    json intercepts = json::array();
    for (const Affine& piece : f.pieces()) {
        slopes.push_back(piece.slope);
        intercepts.push_back(piece.intercept);
    }
    j["slopes"] = std::move(slopes);
    j["intercepts"] = std::move(intercepts);
    return j;
}

PiecewiseAffine pwa_from_json(const json& j) {
    return parse_guard("piecewise-affine function", [&] {
        const auto breakpoints = j.at("breakpoints").get<std::vector<double>>();
        const auto slopes = j.at("slopes").get<std::vector<double>>();
        const auto intercepts = j.at("intercepts").get<std::vector<double>>();
        if (slopes.size() != intercepts.size())
            throw InputError("piecewise-affine function: slopes and intercepts differ in length");
        std::vector<Affine> pieces;
        pieces.reserve(slopes.size());
        for (std::size_t i = 0; i < slopes.size(); ++i)
            pieces.push_back(Affine{slopes[i], intercepts[i]});
        return PiecewiseAffine(breakpoints, std::move(pieces));
    });
}

json to_json(const IntegerStepFunction& f) {
    return json{{"breakpoints", f.breakpoints()}, {"values", f.values()}};
}

IntegerStepFunction step_function_from_json(const json& j) {
    return parse_guard("step function", [&] {
        return IntegerStepFunction(j.at("breakpoints").get<std::vector<double>>(),
                                   j.at("values").get<std::vector<int>>());
    });
}

json to_json(const SupportModel& model) {
    return json{{"k_down", model.k_down}, {"k_up", model.k_up}};
}

SupportModel support_model_from_json(const json& j) {
    return parse_guard("support model", [&] {
        return SupportModel(j.at("k_down").get<std::vector<double>>(),
                            j.at("k_up").get<std::vector<double>>());
    });
}

json to_json(const CalibratedModel& model) {
    json j = to_json(model.model);
    j["adjusted_steps"] = model.adjusted_steps;
    j["mode"] = to_string(model.mode);
    j["epsilon"] = model.epsilon;
    return j;
}

CalibratedModel calibrated_model_from_json(const json& j) {
    return parse_guard("calibrated model", [&] {
        return CalibratedModel{support_model_from_json(j),
                               j.at("adjusted_steps").get<std::vector<std::size_t>>(),
                               parse_calibration_mode(j.at("mode").get<std::string>()),
                               j.at("epsilon").get<double>()};
    });
}

json to_json(const PricingTable& table) {
    json prices = json::array();
    for (const PiecewiseAffine& f : table.prices) prices.push_back(to_json(f));
    json strategies = json::array();
    for (const IntegerStepFunction& f : table.strategies) strategies.push_back(to_json(f));
    return json{{"n", table.n_units},
                {"T", table.horizon()},
                {"model", to_json(table.model)},
                {"prices", std::move(prices)},
                {"strategies", std::move(strategies)}};
}

PricingTable pricing_table_from_json(const json& j) {
    return parse_guard("pricing table", [&] {
        PricingTable table;
        table.n_units = j.at("n").get<int>();
        if (table.n_units < 1) throw InputError("pricing table: n must be at least 1");
        table.model = support_model_from_json(j.at("model"));
        const auto horizon = j.at("T").get<std::size_t>();
        if (horizon != table.model.horizon())
            throw InputError("pricing table: T disagrees with the model length");
        for (const json& f : j.at("prices")) table.prices.push_back(pwa_from_json(f));
        for (const json& f : j.at("strategies"))
            table.strategies.push_back(step_function_from_json(f));
        if (table.prices.size() != horizon + 1 || table.strategies.size() != horizon)
            throw InputError("pricing table: price or strategy count disagrees with T");
        return table;
    });
}

json to_json(const ConvergenceReport& report) {
    json per_n = json::array();
    for (const ConvergencePoint& p : report.per_n)
        per_n.push_back(json{{"n", p.n_units},
                             {"max_lower_violation", p.max_lower_violation},
                             {"max_upper_violation", p.max_upper_violation},
                             {"sup_gap", p.sup_gap}});
    return json{{"n_values", report.n_values},
                {"bound_constant", report.bound_constant},
                {"domain_cap", report.domain_cap},
                {"max_lower_violation", report.max_lower_violation},
                {"max_upper_violation", report.max_upper_violation},
                {"per_n", std::move(per_n)}};
}

ConvergenceReport convergence_report_from_json(const json& j) {
    return parse_guard("convergence report", [&] {
        ConvergenceReport report;
        report.n_values = j.at("n_values").get<std::vector<int>>();
        report.bound_constant = j.at("bound_constant").get<double>();
        report.domain_cap = j.at("domain_cap").get<double>();
        report.max_lower_violation = j.at("max_lower_violation").get<double>();
        report.max_upper_violation = j.at("max_upper_violation").get<double>();
        for (const json& p : j.at("per_n"))
            report.per_n.push_back(
                ConvergencePoint{p.at("n").get<int>(), p.at("max_lower_violation").get<double>(),
                                 p.at("max_upper_violation").get<double>(),
                                 p.at("sup_gap").get<double>()});
        return report;
    });
}

namespace {

json to_json(const GroupStats& g) {
    return json{{"count", g.count}, {"mean", g.mean}, {"min", g.min}, {"max", g.max}};
}

GroupStats group_from_json(const json& j) {
    return GroupStats{j.at("count").get<std::size_t>(), j.at("mean").get<double>(),
                      j.at("min").get<double>(), j.at("max").get<double>()};
}

}  // namespace

json to_json(const BacktestReport& report) {
    json paths = json::array();
    for (const PathRecord& rec : report.paths) {
        json r{{"initial_price", rec.initial_price},
               {"terminal_wealth", rec.terminal_wealth},
               {"payoff", rec.payoff},
               {"terminal_spot", rec.terminal_spot},
               {"relative_error", rec.relative_error},
               {"support_breach", rec.support_breach}};
        r["first_breach_step"] =
            rec.support_breach ? json(rec.first_breach_step) : json(nullptr);
        paths.push_back(std::move(r));
    }
    json histogram = json::array();
    for (const HistogramBin& bin : report.histogram)
        histogram.push_back(
            json{{"bin_left", bin.left}, {"bin_right", bin.right}, {"count", bin.count}});
    return json{{"paths", std::move(paths)},
                {"all", to_json(report.all)},
                {"in_support", to_json(report.in_support)},
                {"breached", to_json(report.breached)},
                {"histogram", std::move(histogram)}};
}

BacktestReport backtest_report_from_json(const json& j) {
    return parse_guard("backtest report", [&] {
        BacktestReport report;
        for (const json& r : j.at("paths")) {
            PathRecord rec;
            rec.initial_price = r.at("initial_price").get<double>();
            rec.terminal_wealth = r.at("terminal_wealth").get<double>();
            rec.payoff = r.at("payoff").get<double>();
            rec.terminal_spot = r.at("terminal_spot").get<double>();
            rec.relative_error = r.at("relative_error").get<double>();
            rec.support_breach = r.at("support_breach").get<bool>();
            if (rec.support_breach)
                rec.first_breach_step = r.at("first_breach_step").get<std::size_t>();
            report.paths.push_back(rec);
        }
        report.all = group_from_json(j.at("all"));
        report.in_support = group_from_json(j.at("in_support"));
        report.breached = group_from_json(j.at("breached"));
        for (const json& b : j.at("histogram"))
            report.histogram.push_back(HistogramBin{b.at("bin_left").get<double>(),
                                                    b.at("bin_right").get<double>(),
                                                    b.at("count").get<std::size_t>()});
        return report;
    });
}

void write_json_file(const json& j, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw InputError("cannot write " + file.string());
    out << j.dump(2) << '\n';
    if (!out) throw InputError("failed writing " + file.string());
}

json read_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open " + file.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(file.string() + ": " + e.what());
    }
}

}  // namespace inthedge
