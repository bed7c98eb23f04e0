#include "inthedge/grid_pricer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

namespace inthedge {

namespace {

using nlohmann::json;

void validate_spec(const GridSpec& spec) {
    if (!(spec.step > 0.0) || !std::isfinite(spec.step))
        throw InputError("grid: step must be positive and finite");
    if (!(spec.s0_max > 0.0) || !std::isfinite(spec.s0_max))
        throw InputError("grid: s0_max must be positive and finite");
    if (spec.s0_max / spec.step < 1.0) throw InputError("grid: empty grid, s0_max below one step");
}

// floor with a relative guard so exact ratios survive division rounding
// (1000 / 0.1 evaluates just below 10000).
std::size_t guarded_floor(double v) {
    return static_cast<std::size_t>(std::floor(v * (1.0 + 1e-12) + 1e-9));
}

std::string step_file_name(std::size_t t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "step_%03zu.csv", t);
    return buf;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double interpolate_row(const std::vector<double>& row, double step, double x) {
    const std::size_t last = row.size() - 1;
    if (last == 0) return row[0];
    const double pos = x / step;
    if (pos >= static_cast<double>(last)) {
        // Off the top of the row: continue the last cell's slope.
        const double slope = row[last] - row[last - 1];
        return row[last] + (pos - static_cast<double>(last)) * slope;
    }
    const std::size_t j = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(j);
    return row[j] + frac * (row[j + 1] - row[j]);
}

std::vector<std::size_t> grid_sizes(const GridSpec& spec, const SupportModel& model) {
    validate_spec(spec);
    std::vector<std::size_t> sizes;
    sizes.reserve(model.horizon() + 1);
    double k_max = 1.0;
    double cap = spec.s0_max;
    sizes.push_back(guarded_floor(cap / spec.step));
    for (std::size_t t = 1; t <= model.horizon(); ++t) {
        k_max = std::max(k_max, model.k_up[t - 1]);
        cap = spec.s0_max * std::pow(k_max, static_cast<double>(t));
        sizes.push_back(guarded_floor(cap / spec.step));
    }
    return sizes;
}

GridTable grid_backward_price(const PiecewiseAffine& payoff, int n_units,
                              const SupportModel& model, const GridSpec& spec) {
    if (n_units < 1) throw InputError("grid: need at least one unit");
    const std::vector<std::size_t> sizes = grid_sizes(spec, model);
    const std::size_t horizon = model.horizon();
    const double step = spec.step;

    GridTable table;
    table.n_units = n_units;
    table.step = step;
    table.model = model;
    table.prices.resize(horizon + 1);
    table.positions.resize(horizon);

    std::vector<double>& terminal = table.prices[horizon];
    terminal.resize(sizes[horizon] + 1);
    for (std::size_t i = 0; i < terminal.size(); ++i)
        terminal[i] = n_units * payoff(step * static_cast<double>(i));

    for (std::size_t t = horizon; t-- > 0;) {
        const std::vector<double>& next = table.prices[t + 1];
        const double k_down = model.k_down[t];
        const double k_up = model.k_up[t];
        const std::size_t count = sizes[t] + 1;
        const std::size_t last_next = next.size() - 1;

        // Discrete Lipschitz estimate of the next row bounds useful positions.
        double lipschitz = 0.0;
        for (std::size_t j = 0; j + 1 < next.size(); ++j)
            lipschitz = std::max(lipschitz, std::abs(next[j + 1] - next[j]) / step);
        const int theta_lo = static_cast<int>(std::ceil(-lipschitz - 1.0));
        const int theta_hi = static_cast<int>(std::floor(lipschitz + 1.0));

        std::vector<double>& prices = table.prices[t];
        std::vector<int>& positions = table.positions[t];
        prices.assign(count, std::numeric_limits<double>::infinity());
        positions.assign(count, 0);

        std::vector<double> q(next.size());
        for (int theta = theta_lo; theta <= theta_hi; ++theta) {
            for (std::size_t j = 0; j < next.size(); ++j)
                q[j] = next[j] - theta * (step * static_cast<double>(j));

            std::deque<std::size_t> best;  // node indices, q strictly decreasing
            std::size_t fed = 0;           // nodes [0, fed) already offered
            for (std::size_t i = 0; i < count; ++i) {
                const double x = step * static_cast<double>(i);
                const double w_lo = k_down * x;
                const double w_hi = k_up * x;
                const std::size_t j_lo =
                    static_cast<std::size_t>(std::max(0.0, std::ceil(w_lo / step - 1e-9)));
                const std::size_t j_hi = std::min(last_next, guarded_floor(w_hi / step));

                while (fed <= j_hi) {
                    while (!best.empty() && q[best.back()] <= q[fed]) best.pop_back();
                    best.push_back(fed);
                    ++fed;
                }
                while (!best.empty() && best.front() < j_lo) best.pop_front();

                double sup = -std::numeric_limits<double>::infinity();
                if (!best.empty() && best.front() <= j_hi) sup = q[best.front()];
                // Window endpoints rarely sit on nodes; interpolate them.
                sup = std::max(sup, interpolate_row(next, step, w_lo) - theta * w_lo);
                sup = std::max(sup, interpolate_row(next, step, w_hi) - theta * w_hi);

                const double cost = sup + theta * x;
                if (cost < prices[i]) {
                    prices[i] = cost;
                    positions[i] = theta;
                }
            }
        }
    }
    return table;
}

void write_grid_table(const GridTable& table, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::size_t horizon = table.horizon();
    if (table.prices.size() != horizon + 1 || table.positions.size() != horizon)
        throw InputError("grid table rows do not match its horizon");

    json manifest;
    manifest["n"] = table.n_units;
    manifest["step"] = table.step;
    manifest["horizon"] = horizon;
    manifest["k_down"] = table.model.k_down;
    manifest["k_up"] = table.model.k_up;
    json sizes = json::array();
    json files = json::array();
    for (std::size_t t = 0; t <= horizon; ++t) {
        sizes.push_back(table.prices[t].size() - 1);
        files.push_back(step_file_name(t));
    }
    manifest["sizes"] = sizes;
    manifest["files"] = files;

    std::ofstream mf(dir / "manifest.json");
    if (!mf) throw InputError("grid: cannot write " + (dir / "manifest.json").string());
    mf << manifest.dump(2) << '\n';

    for (std::size_t t = 0; t <= horizon; ++t) {
        const std::filesystem::path path = dir / step_file_name(t);
        std::ofstream out(path);
        if (!out) throw InputError("grid: cannot write " + path.string());
        const bool has_theta = t < horizon;
        out << (has_theta ? "x,price,theta\n" : "x,price\n");
        for (std::size_t i = 0; i < table.prices[t].size(); ++i) {
            out << format_double(table.step * static_cast<double>(i)) << ','
                << format_double(table.prices[t][i]);
            if (has_theta) out << ',' << table.positions[t][i];
            out << '\n';
        }
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

double parse_double_field(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v))
            throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw InputError(where + ": bad number '" + text + "'");
    }
}

}  // namespace

GridTable read_grid_table(const std::filesystem::path& dir) {
    const std::filesystem::path manifest_path = dir / "manifest.json";
    std::ifstream mf(manifest_path);
    if (!mf) throw InputError("grid: cannot open " + manifest_path.string());
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw InputError("grid: bad manifest " + manifest_path.string() + ": " + e.what());
    }

    GridTable table;
    try {
        table.n_units = manifest.at("n").get<int>();
        table.step = manifest.at("step").get<double>();
        table.model = SupportModel(manifest.at("k_down").get<std::vector<double>>(),
                                   manifest.at("k_up").get<std::vector<double>>());
        const std::size_t horizon = manifest.at("horizon").get<std::size_t>();
        if (horizon != table.model.horizon())
            throw InputError("grid: manifest horizon does not match its bounds");
        const auto sizes = manifest.at("sizes").get<std::vector<std::size_t>>();
        const auto files = manifest.at("files").get<std::vector<std::string>>();
        if (sizes.size() != horizon + 1 || files.size() != horizon + 1)
            throw InputError("grid: manifest needs one size and file per step");
        if (table.n_units < 1) throw InputError("grid: manifest unit count must be positive");
        if (!(table.step > 0.0)) throw InputError("grid: manifest step must be positive");

        table.prices.resize(horizon + 1);
        table.positions.resize(horizon);
        for (std::size_t t = 0; t <= horizon; ++t) {
            const std::filesystem::path path = dir / files[t];
            std::ifstream in(path);
            if (!in) throw InputError("grid: cannot open " + path.string());
            const bool has_theta = t < horizon;
            std::string line;
            if (!std::getline(in, line))
                throw InputError("grid: " + path.string() + " is empty");
            std::size_t row = 1;
            table.prices[t].reserve(sizes[t] + 1);
            if (has_theta) table.positions[t].reserve(sizes[t] + 1);
            while (std::getline(in, line)) {
                ++row;
                if (line.empty()) continue;
                const auto fields = split_csv_line(line);
                const std::string where = path.string() + " row " + std::to_string(row);
                if (fields.size() != (has_theta ? 3u : 2u))
                    throw InputError(where + ": wrong field count");
                const double x = parse_double_field(fields[0], where);
                const double expect = table.step * static_cast<double>(table.prices[t].size());
                if (std::abs(x - expect) > 1e-6 * std::max(1.0, expect))
                    throw InputError(where + ": x off the grid");
                table.prices[t].push_back(parse_double_field(fields[1], where));
                if (has_theta) {
                    const double theta = parse_double_field(fields[2], where);
                    if (theta != std::floor(theta))
                        throw InputError(where + ": position must be an integer");
                    table.positions[t].push_back(static_cast<int>(theta));
                }
            }
            if (table.prices[t].size() != sizes[t] + 1)
                throw InputError(path.string() + ": row count does not match the manifest");
        }
    } catch (const json::exception& e) {
        throw InputError("grid: bad manifest " + manifest_path.string() + ": " + e.what());
    }
    return table;
}

}  // namespace inthedge
