#include <spdlog/spdlog.h>

#include <fstream>
#include <ostream>

#include "commands.hpp"
#include "utc/error.hpp"
#include "utc/serialization.hpp"
#include "utc/var_model.hpp"

namespace utc::cli {

namespace {

struct TrainArgs {
  DataFlags data;
  ModelFlags model;
  std::string out_path;
  std::string log_path;
  std::vector<std::string> targets;
  std::optional<int> periods;
};

void run_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = a.model.resolve();
  cfg.validate();
  if (cfg.mode == "market") throw ConfigError("market mode has nothing to train");

  ReturnPanel panel = a.data.load();
  if (a.periods) {
    if (*a.periods < 2 || *a.periods > panel.num_times()) {
      throw ConfigError("--train-periods must lie in [2, " + std::to_string(panel.num_times()) + "]");
    }
    panel = panel.slice(0, *a.periods - 1);
  }

  std::ofstream log;
  if (!a.log_path.empty()) {
    log.open(a.log_path);
    if (!log) throw InputError("cannot write " + a.log_path);
  }

  if (cfg.mode == "var") {
    const int lag = cfg.var_lag > 0 ? cfg.var_lag : select_lag_aic(panel, cfg.var_max_lag);
    const VarModel m = fit_var(panel, lag);
    save_text(a.out_path, var_to_json(m, panel.symbols()));
    if (log.is_open()) {
      log << nlohmann::json{{"model", "var"},
                            {"lag", lag},
                            {"aic", var_aic(m)},
                            {"effective_samples", m.effective_samples}}
                 .dump()
          << '\n';
    }
    out << "fitted VAR(" << lag << ") on " << panel.num_stocks() << " series, "
        << m.effective_samples << " samples -> " << a.out_path << '\n';
    return;
  }

  cfg.hyper.num_stocks = panel.num_stocks();
  const TrainingRange range = full_training_range(cfg.hyper, panel);
  const std::vector<int> targets = parse_targets(a.targets, panel);
  const Mode mode = parse_mode(cfg.mode);
  spdlog::info("training {} companies on rows [{}, {}]", targets.size(), range.first, range.last);
  const BundleTrainResult r = train_bundle(mode, cfg.hyper, cfg.train, panel, targets, range);
  save_text(a.out_path, bundle_to_json(r.bundle));
  if (log.is_open()) {
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const std::string& symbol = panel.symbols()[static_cast<std::size_t>(targets[k])];
      for (const auto& s : r.rounds[k]) log << round_stats_to_json(s, symbol) << '\n';
    }
  }
  out << "trained " << targets.size() << ' ' << cfg.mode << " compan"
      << (targets.size() == 1 ? "y" : "ies") << " on rows [" << range.first << ", " << range.last
      << "] -> " << a.out_path << '\n';
}

}  // namespace

void add_train(CLI::App& app, std::ostream& out) {
  auto args = std::make_shared<TrainArgs>();
  CLI::App* sub = app.add_subcommand("train", "train a TC, UTC or VAR model");
  args->data.attach(*sub);
  args->model.attach(*sub, true);
  sub->add_option("--out", args->out_path, "model JSON")->required();
  sub->add_option("--log", args->log_path, "JSON-lines training log");
  sub->add_option("--targets", args->targets, "symbols to train companies for (default: all)")
      ->delimiter(',');
  sub->add_option("--train-periods", args->periods, "use only the first N periods");
  sub->callback([args, &out] { run_train(*args, out); });
}

}  // namespace utc::cli
