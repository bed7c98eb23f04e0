#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "inthedge/backtest.hpp"
#include "inthedge/calibration.hpp"
#include "inthedge/grid_pricer.hpp"
#include "inthedge/pricer.hpp"
#include "inthedge/real_oracle.hpp"
#include "inthedge/serialize.hpp"

namespace {

namespace fs = std::filesystem;
using inthedge::InputError;
using nlohmann::json;

struct PayoffFlags {
    std::string kind = "call";
    double strike = 0.0;
    std::string knots;
    double final_slope = 0.0;
};

void add_payoff_flags(CLI::App* cmd, PayoffFlags& p) {
    cmd->add_option("--payoff", p.kind, "Claim shape: call, put, or custom")
        ->check(CLI::IsMember({"call", "put", "custom"}));
    cmd->add_option("--strike", p.strike, "Strike of a call or put payoff");
    cmd->add_option("--knots", p.knots,
                    "Custom payoff knots as x:y,x:y,... with the first x at 0");
    cmd->add_option("--final-slope", p.final_slope,
                    "Custom payoff slope beyond the last knot (default 0)");
}

double parse_number(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw InputError(what + ": cannot parse number '" + text + "'");
    }
}

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find(sep, start);
        if (end == std::string::npos) {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

inthedge::PiecewiseAffine build_payoff(const PayoffFlags& p) {
    if (p.kind == "call") {
        if (!(p.strike > 0.0)) throw InputError("--strike must be positive for a call");
        return inthedge::PiecewiseAffine::call_payoff(p.strike);
    }
    if (p.kind == "put") {
        if (!(p.strike > 0.0)) throw InputError("--strike must be positive for a put");
        return inthedge::PiecewiseAffine::put_payoff(p.strike);
    }
    if (p.knots.empty()) throw InputError("--knots is required for a custom payoff");
    std::vector<std::pair<double, double>> knots;
    for (const std::string& token : split_list(p.knots, ',')) {
        const std::size_t colon = token.find(':');
        if (colon == std::string::npos)
            throw InputError("--knots: token '" + token + "' is not x:y");
        knots.emplace_back(parse_number(token.substr(0, colon), "--knots"),
                           parse_number(token.substr(colon + 1), "--knots"));
    }
    return inthedge::PiecewiseAffine::from_knots(knots, p.final_slope);
}

std::vector<int> parse_units_list(const std::string& text) {
    std::vector<int> units;
    if (text.empty()) return units;
    for (const std::string& token : split_list(text, ',')) {
        const double v = parse_number(token, "--units-list");
        const int n = static_cast<int>(v);
        if (static_cast<double>(n) != v || n < 1)
            throw InputError("--units-list: '" + token + "' is not a positive integer");
        units.push_back(n);
    }
    return units;
}

// Defaults from the JSON file named by INTHEDGE_CONFIG are injected as
// synthetic flags right after the subcommand token; explicit flags come later
// on the line and win under the take-last policy.
void inject_config(CLI::App& app, std::vector<std::string>& tokens) {
    const char* env = std::getenv("INTHEDGE_CONFIG");
    if (env == nullptr || *env == '\0') return;

    CLI::App* sub = nullptr;
    std::size_t sub_pos = 0;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (!tokens[i].empty() && tokens[i][0] == '-') continue;
        try {
            sub = app.get_subcommand(tokens[i]);
        } catch (const CLI::OptionNotFound&) {
        }
        sub_pos = i;
        break;
    }
    if (sub == nullptr) return;

    const json cfg = inthedge::read_json_file(env);
    if (!cfg.is_object())
        throw InputError(std::string(env) + ": config must be a JSON object of flag defaults");
    std::vector<std::string> inject;
    for (const auto& [key, value] : cfg.items()) {
        try {
            sub->get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
            continue;  // the key may configure a different subcommand
        }
        std::string repr;
        if (value.is_string()) {
            repr = value.get<std::string>();
        } else if (value.is_boolean()) {
            repr = value.get<bool>() ? "true" : "false";
        } else if (value.is_number()) {
            repr = value.dump();
        } else {
            throw InputError("config key '" + key + "' must be a scalar");
        }
        inject.push_back("--" + key + "=" + repr);
    }
    tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, inject.begin(),
                  inject.end());
}

struct CalibrateArgs {
    std::string input;
    std::string output;
    std::size_t period_length = 0;
    std::string mode = "per_step";
    double epsilon = 1e-4;
    bool strict = false;
    double train_fraction = 0.0;
};

void run_calibrate(const CalibrateArgs& a) {
    const inthedge::PricePath series = inthedge::read_price_csv(a.input);
    const inthedge::TrainingSet train =
        a.train_fraction > 0.0
            ? inthedge::split_train_test(series, a.period_length, a.train_fraction).train
            : inthedge::cut_into_periods(series, a.period_length);
    const inthedge::CalibratedModel fit = inthedge::calibrate(
        train, inthedge::parse_calibration_mode(a.mode), a.epsilon, a.strict);
    inthedge::write_json_file(inthedge::to_json(fit), a.output);

    if (!fit.adjusted_steps.empty()) {
        std::cerr << "warning: " << fit.adjusted_steps.size()
                  << " step(s) had one-sided moves; bounds nudged to straddle 1 (steps";
        for (std::size_t i = 0; i < fit.adjusted_steps.size() && i < 10; ++i)
            std::cerr << ' ' << fit.adjusted_steps[i];
        if (fit.adjusted_steps.size() > 10) std::cerr << " ...";
        std::cerr << ")\n";
    }
    std::cout << "calibrated " << fit.model.horizon() << " step(s) from "
              << train.periods.size() << " period(s), " << fit.adjusted_steps.size()
              << " adjusted -> " << a.output << '\n';
}

struct PriceArgs {
    std::string model_path;
    std::string output;
    PayoffFlags payoff;
    int units = 1;
    std::string backend = "exact";
    double step = 0.1;
    double s0_max = 0.0;
};

void run_price(const PriceArgs& a) {
    const inthedge::SupportModel model =
        inthedge::support_model_from_json(inthedge::read_json_file(a.model_path));
    const inthedge::PiecewiseAffine payoff = build_payoff(a.payoff);
    if (a.backend == "exact") {
        const inthedge::PricingTable table = inthedge::backward_price(payoff, a.units, model);
        inthedge::write_json_file(inthedge::to_json(table), a.output);
        std::cout << "priced " << a.units << " unit(s) over " << model.horizon()
                  << " step(s), exact backend -> " << a.output << '\n';
    } else {
        if (!(a.s0_max > 0.0)) throw InputError("--s0-max is required for the grid backend");
        const inthedge::GridTable table =
            inthedge::grid_backward_price(payoff, a.units, model, {a.step, a.s0_max});
        inthedge::write_grid_table(table, a.output);
        std::cout << "priced " << a.units << " unit(s) over " << model.horizon()
                  << " step(s), grid step " << a.step << " -> " << a.output << '\n';
    }
}

struct VerifyArgs {
    std::string model_path;
    std::string output;
    PayoffFlags payoff;
    std::string units_list;
    double spot_bound = 0.0;
    std::size_t audit_points = 500;
};

void run_verify(const VerifyArgs& a) {
    const inthedge::SupportModel model =
        inthedge::support_model_from_json(inthedge::read_json_file(a.model_path));
    const inthedge::ConvergenceReport report =
        inthedge::check_convergence(build_payoff(a.payoff), model, parse_units_list(a.units_list),
                                    a.spot_bound, a.audit_points);
    inthedge::write_json_file(inthedge::to_json(report), a.output);
    std::cout << "verified " << report.per_n.size() << " unit count(s): max lower violation "
              << report.max_lower_violation << ", max upper violation "
              << report.max_upper_violation << " -> " << a.output << '\n';
}

struct BacktestArgs {
    std::string table_path;
    std::string input;
    std::string output;
    std::string histogram;
    std::size_t bins = 20;
    double train_fraction = 0.0;
};

void run_backtest_cmd(const BacktestArgs& a) {
    const inthedge::HedgeSource source =
        fs::is_directory(a.table_path)
            ? inthedge::grid_source(inthedge::read_grid_table(a.table_path))
            : inthedge::exact_source(
                  inthedge::pricing_table_from_json(inthedge::read_json_file(a.table_path)));
    const inthedge::PricePath series = inthedge::read_price_csv(a.input);
    const std::size_t period_length = source.model.horizon() + 1;
    const inthedge::TrainingSet test =
        a.train_fraction > 0.0
            ? inthedge::split_train_test(series, period_length, a.train_fraction).test
            : inthedge::cut_into_periods(series, period_length);

    const inthedge::BacktestReport report = inthedge::run_backtest(source, test, a.bins);
    inthedge::write_json_file(inthedge::to_json(report), a.output);
    fs::path hist_path = a.histogram.empty()
                             ? fs::path(a.output).replace_extension().concat("_hist.csv")
                             : fs::path(a.histogram);
    inthedge::write_histogram_csv(report.histogram, hist_path);

    std::cout << "replayed " << report.all.count << " path(s): mean error "
              << report.all.mean << "%, min " << report.all.min << "%, max "
              << report.all.max << "%, " << report.breached.count
              << " support breach(es) -> " << a.output << ", " << hist_path.string() << '\n';
}

struct PlotArgs {
    std::string table_path;
    std::string model_path;
    std::string output;
    PayoffFlags payoff;
    std::string units_list;
    double x_min = 0.0;
    double x_max = 0.0;
    std::size_t points = 200;
};

void run_plotdata(const PlotArgs& a) {
    if (!(a.x_min >= 0.0) || !(a.x_max > a.x_min))
        throw InputError("need 0 <= x-min < x-max");
    if (a.points < 2) throw InputError("--points must be at least 2");

    inthedge::SupportModel model;
    inthedge::PiecewiseAffine unit_payoff;
    std::vector<std::pair<int, inthedge::PiecewiseAffine>> per_unit;
    if (!a.table_path.empty()) {
        const inthedge::PricingTable table =
            inthedge::pricing_table_from_json(inthedge::read_json_file(a.table_path));
        model = table.model;
        unit_payoff = inthedge::scale(table.prices.back(), 1.0 / table.n_units);
        per_unit.emplace_back(table.n_units,
                              inthedge::scale(table.prices.front(), 1.0 / table.n_units));
    } else {
        model = inthedge::support_model_from_json(inthedge::read_json_file(a.model_path));
        unit_payoff = build_payoff(a.payoff);
        const std::vector<int> units = parse_units_list(a.units_list);
        if (units.empty()) throw InputError("--units-list is empty");
        for (int n : units) {
            const inthedge::PricingTable table =
                inthedge::backward_price(unit_payoff, n, model);
            per_unit.emplace_back(n, inthedge::scale(table.prices.front(), 1.0 / n));
        }
    }
    const inthedge::PiecewiseAffine ghat =
        inthedge::real_backward_price(unit_payoff, model).front();

    std::ofstream out(a.output);
    if (!out) throw InputError("cannot write " + a.output);
    out << "x";
    for (const auto& [n, curve] : per_unit) out << ",per_unit_n" << n;
    out << ",ghat\n";
    char buf[40];
    for (std::size_t i = 0; i < a.points; ++i) {
        const double x = a.x_min + (a.x_max - a.x_min) * static_cast<double>(i) /
                                       static_cast<double>(a.points - 1);
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << buf;
        for (const auto& [n, curve] : per_unit) {
            std::snprintf(buf, sizeof buf, "%.17g", curve(x));
            out << ',' << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", ghat(x));
        out << ',' << buf << '\n';
    }
    if (!out) throw InputError("failed writing " + a.output);
    std::cout << "wrote " << a.points << " rows, " << per_unit.size()
              << " per-unit column(s) -> " << a.output << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Super-hedging prices and integer hedges for piecewise-affine claims"};
    app.require_subcommand(1);

    const auto take_last = [](CLI::App* cmd) {
        cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        return cmd;
    };

    CalibrateArgs cal;
    CLI::App* cal_cmd =
        take_last(app.add_subcommand("calibrate", "Estimate support bounds from a price CSV"));
    cal_cmd->add_option("--input", cal.input, "Price CSV with header date,price")->required();
    cal_cmd->add_option("--period-length", cal.period_length, "Observations per period (T+1)")
        ->required();
    cal_cmd->add_option("--mode", cal.mode, "Bound pooling: per_step or pooled")
        ->check(CLI::IsMember({"per_step", "pooled"}));
    cal_cmd->add_option("--epsilon", cal.epsilon, "Nudge for one-sided steps (default 1e-4)");
    cal_cmd->add_flag("--strict", cal.strict, "Fail on one-sided steps instead of nudging");
    cal_cmd->add_option("--train-fraction", cal.train_fraction,
                        "Calibrate on the earliest fraction of periods only");
    cal_cmd->add_option("--output", cal.output, "Model JSON to write")->required();
    cal_cmd->callback([&cal] { run_calibrate(cal); });

    PriceArgs price;
    CLI::App* price_cmd =
        take_last(app.add_subcommand("price", "Build a super-hedging price table"));
    price_cmd->add_option("--model", price.model_path, "Support model JSON")->required();
    add_payoff_flags(price_cmd, price.payoff);
    price_cmd->add_option("--units", price.units, "Number of claims n (default 1)");
    price_cmd->add_option("--backend", price.backend, "exact or grid")
        ->check(CLI::IsMember({"exact", "grid"}));
    price_cmd->add_option("--step", price.step, "Grid spacing (grid backend, default 0.1)");
    price_cmd->add_option("--s0-max", price.s0_max,
                          "Largest initial spot the grid must cover (grid backend)");
    price_cmd->add_option("--output", price.output,
                          "Table JSON (exact) or directory (grid) to write")
        ->required();
    price_cmd->callback([&price] { run_price(price); });

    VerifyArgs verify;
    CLI::App* verify_cmd = take_last(
        app.add_subcommand("verify", "Audit per-unit prices against the real-position bound"));
    verify_cmd->add_option("--model", verify.model_path, "Support model JSON")->required();
    add_payoff_flags(verify_cmd, verify.payoff);
    verify_cmd->add_option("--units-list", verify.units_list, "Unit counts, e.g. 1,2,5,10")
        ->required();
    verify_cmd->add_option("--spot-bound", verify.spot_bound, "Terminal spot cap M")
        ->required();
    verify_cmd->add_option("--audit-points", verify.audit_points,
                           "Audit grid size (default 500)");
    verify_cmd->add_option("--output", verify.output, "Report JSON to write")->required();
    verify_cmd->callback([&verify] { run_verify(verify); });

    BacktestArgs backtest;
    CLI::App* backtest_cmd = take_last(
        app.add_subcommand("backtest", "Replay the stored hedge on realized price paths"));
    backtest_cmd->add_option("--table", backtest.table_path,
                             "Pricing table JSON or grid directory")
        ->required();
    backtest_cmd->add_option("--input", backtest.input, "Price CSV with header date,price")
        ->required();
    backtest_cmd->add_option("--bins", backtest.bins, "Histogram bins (default 20)");
    backtest_cmd->add_option("--train-fraction", backtest.train_fraction,
                             "Skip the earliest fraction of periods (the training part)");
    backtest_cmd->add_option("--histogram", backtest.histogram,
                             "Histogram CSV path (default <output>_hist.csv)");
    backtest_cmd->add_option("--output", backtest.output, "Report JSON to write")->required();
    backtest_cmd->callback([&backtest] { run_backtest_cmd(backtest); });

    PlotArgs plot;
    CLI::App* plot_cmd =
        take_last(app.add_subcommand("plotdata", "Emit per-unit price curves as CSV"));
    CLI::Option* plot_table =
        plot_cmd->add_option("--table", plot.table_path, "Pricing table JSON");
    plot_cmd->add_option("--model", plot.model_path, "Support model JSON")
        ->excludes(plot_table);
    add_payoff_flags(plot_cmd, plot.payoff);
    plot_cmd->add_option("--units-list", plot.units_list, "Unit counts, one curve each");
    plot_cmd->add_option("--x-min", plot.x_min, "Smallest spot to tabulate (default 0)");
    plot_cmd->add_option("--x-max", plot.x_max, "Largest spot to tabulate")->required();
    plot_cmd->add_option("--points", plot.points, "Row count (default 200)");
    plot_cmd->add_option("--output", plot.output, "CSV to write")->required();
    plot_cmd->callback([&plot] {
        if (plot.table_path.empty() && plot.model_path.empty())
            throw InputError("plotdata needs --table or --model");
        run_plotdata(plot);
    });

    std::vector<std::string> tokens(argv, argv + argc);
    try {
        inject_config(app, tokens);
        std::vector<char*> raw;
        raw.reserve(tokens.size());
        for (std::string& t : tokens) raw.push_back(t.data());
        app.parse(static_cast<int>(raw.size()), raw.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const inthedge::InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
