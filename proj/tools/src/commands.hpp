#pragma once

#include <CLI11.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"
#include "utc/returns.hpp"

namespace utc::cli {

/// Flags shared by train and backtest. Values only override the config when
/// given on the command line.
struct ModelFlags {
  std::string config_path;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> num_traders, fit_rounds, rounds, gm_components, max_terms, max_delay;
  std::optional<double> prune_ratio, noise_var, prior_var, weight_bound, t_y;
  std::optional<int> var_lag, var_max_lag;

  void attach(CLI::App& app, bool with_mode);
  /// Defaults, then the JSON config file, then explicit flags.
  RunConfig resolve() const;
};

struct GateFlags {
  bool gate = false;
  std::optional<int> lookback, min_history;
  std::optional<double> quantile;
  bool invert = false;
  bool pool = false;

  void attach(CLI::App& app);
  void apply(RunConfig& config) const;
};

struct DataFlags {
  std::string path;
  bool returns = false;

  void attach(CLI::App& app);
  ReturnPanel load() const;
};

/// Per-subcommand state; each add_* registers the subcommand and its callback.
void add_synth(CLI::App& app, std::ostream& out, std::ostream& err);
void add_returns(CLI::App& app, std::ostream& out);
void add_train(CLI::App& app, std::ostream& out);
void add_predict(CLI::App& app, std::ostream& out);
void add_backtest(CLI::App& app, std::ostream& out);

std::vector<int> parse_targets(const std::vector<std::string>& names, const ReturnPanel& panel);

}  // namespace utc::cli
