#include "cli.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <ostream>
#include <sstream>

#include "commands.hpp"
#include "utc/csv_io.hpp"
#include "utc/error.hpp"

namespace utc::cli {

namespace {

template <typename T, typename U>
void overlay(const std::optional<T>& flag, U& target) {
  if (flag) target = *flag;
}

}  // namespace

void ModelFlags::attach(CLI::App& app, bool with_mode) {
  app.add_option("--config", config_path, "JSON run config; flags override it")->check(CLI::ExistingFile);
  if (with_mode) app.add_option("--mode", mode, "tc, utc or var");
  app.add_option("--seed", seed, "root seed");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--traders", num_traders, "traders per company (N)");
  app.add_option("--prune-ratio", prune_ratio, "educate / prune ratio (Q)");
  app.add_option("--fit-rounds", fit_rounds, "prune-and-generate repetitions per round (F)");
  app.add_option("--rounds", rounds, "outer training rounds");
  app.add_option("--noise-var", noise_var, "observation noise variance");
  app.add_option("--prior-var", prior_var, "weight prior variance");
  app.add_option("--gm-components", gm_components, "mixture components (K)");
  app.add_option("--max-terms", max_terms, "largest number of terms per trader");
  app.add_option("--max-delay", max_delay, "largest lag per term");
  app.add_option("--weight-bound", weight_bound, "initial weights are uniform on [-b, b]");
  app.add_option("--t-y", t_y, "periods per year");
  app.add_option("--var-lag", var_lag, "VAR lag; 0 selects by AIC");
  app.add_option("--var-max-lag", var_max_lag, "largest lag tried by AIC");
}

RunConfig ModelFlags::resolve() const {
  RunConfig c;
  if (!config_path.empty()) apply_json_file(c, config_path);
  if (!mode.empty()) c.mode = mode;
  overlay(seed, c.train.seed);
  overlay(threads, c.train.threads);
  overlay(num_traders, c.train.num_traders);
  overlay(prune_ratio, c.train.prune_ratio);
  overlay(fit_rounds, c.train.fit_rounds);
  overlay(rounds, c.train.rounds);
  overlay(noise_var, c.train.noise_var);
  overlay(prior_var, c.train.prior_var);
  overlay(gm_components, c.train.gm_components);
  overlay(max_terms, c.hyper.max_terms);
  overlay(max_delay, c.hyper.max_delay);
  overlay(weight_bound, c.hyper.weight_bound);
  overlay(t_y, c.t_y);
  overlay(var_lag, c.var_lag);
  overlay(var_max_lag, c.var_max_lag);
  return c;
}

void GateFlags::attach(CLI::App& app) {
  app.add_flag("--gate", gate, "suppress UTC positions with unusually high sigma");
  app.add_option("--gate-lookback", lookback, "trailing sigmas per stock");
  app.add_option("--gate-quantile", quantile, "threshold quantile of the trailing sigmas");
  app.add_option("--gate-min-history", min_history, "trailing sigmas needed before gating");
  app.add_flag("--gate-invert", invert, "keep only high-sigma positions instead");
  app.add_flag("--gate-pool", pool, "one threshold across all stocks");
}

void GateFlags::apply(RunConfig& c) const {
  if (gate) c.gate = true;
  overlay(lookback, c.filter.lookback);
  overlay(quantile, c.filter.quantile);
  overlay(min_history, c.filter.min_history);
  if (invert) c.filter.invert = true;
  if (pool) c.filter.pool_stocks = true;
}

void DataFlags::attach(CLI::App& app) {
  app.add_option("--data", path, "price or return CSV")->required()->check(CLI::ExistingFile);
  app.add_flag("--returns", returns, "treat the CSV as log returns even without the marker line");
}

ReturnPanel DataFlags::load() const { return load_panel_as_returns(path, returns); }

std::vector<int> parse_targets(const std::vector<std::string>& names, const ReturnPanel& panel) {
  std::vector<int> out;
  if (names.empty()) {
    for (int i = 0; i < panel.num_stocks(); ++i) out.push_back(i);
    return out;
  }
  for (const auto& n : names) {
    const int i = panel.find_symbol(n);
    if (i < 0) throw ConfigError("target symbol '" + n + "' is not in the panel");
    if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Uncertainty-aware Trader-Company return prediction", "utc"};
  app.require_subcommand(1);
  app.fallthrough();  // global options such as --log-level may follow the subcommand
  app.set_version_flag("--version", "0.1.0");
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  add_synth(app, out, err);
  add_returns(app, out);
  add_train(app, out);
  add_predict(app, out);
  add_backtest(app, out);

  app.parse_complete_callback([&] { spdlog::set_level(spdlog::level::from_str(log_level)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == static_cast<int>(CLI::ExitCodes::Success) ? kExitOk : kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace utc::cli
