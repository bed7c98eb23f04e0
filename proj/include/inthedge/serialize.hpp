#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "inthedge/backtest.hpp"
#include "inthedge/calibration.hpp"
#include "inthedge/pricer.hpp"
#include "inthedge/pwa.hpp"
#include "inthedge/real_oracle.hpp"

namespace inthedge {

// JSON shapes:
//   PiecewiseAffine     {"breakpoints", "slopes", "intercepts"}
//   IntegerStepFunction {"breakpoints", "values"}
//   SupportModel        {"k_down", "k_up"}
//   CalibratedModel     adds {"adjusted_steps", "mode", "epsilon"}
//   PricingTable        {"n", "T", "model", "prices", "strategies"}
// Doubles round-trip bit-identically (shortest-representation printing).
// Malformed documents surface as InputError.

nlohmann::json to_json(const PiecewiseAffine& f);
PiecewiseAffine pwa_from_json(const nlohmann::json& j);

nlohmann::json to_json(const IntegerStepFunction& f);
IntegerStepFunction step_function_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SupportModel& model);
// Accepts both the bare and the calibrated shape (extra keys ignored).
SupportModel support_model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CalibratedModel& model);
CalibratedModel calibrated_model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PricingTable& table);
PricingTable pricing_table_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ConvergenceReport& report);
ConvergenceReport convergence_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BacktestReport& report);
BacktestReport backtest_report_from_json(const nlohmann::json& j);

// Pretty-printed with sorted keys, so identical values give identical bytes.
void write_json_file(const nlohmann::json& j, const std::filesystem::path& file);
nlohmann::json read_json_file(const std::filesystem::path& file);

}  // namespace inthedge
