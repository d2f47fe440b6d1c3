#pragma once

#include <json.hpp>

#include <string>

#include "utc/backtest.hpp"
#include "utc/company.hpp"
#include "utc/trader.hpp"

namespace utc::cli {

/// Everything a train or backtest run needs besides the data itself.
struct RunConfig {
  std::string mode = "utc";  // tc | utc | var | market
  TraderHyperParams hyper;
  TrainConfig train;
  UncertaintyFilterConfig filter;
  bool gate = false;
  double t_y = 250.0;
  int var_lag = 0;  // 0 selects the lag by AIC
  int var_max_lag = 10;

  void validate() const;
};

/// Overlays keys from a JSON config object. Unknown keys are rejected so
/// typos do not silently fall back to defaults.
void apply_json(RunConfig& config, const nlohmann::json& j);

/// Reads a JSON config file and overlays it on `config`.
void apply_json_file(RunConfig& config, const std::string& path);

nlohmann::json to_json(const RunConfig& config);

}  // namespace utc::cli
