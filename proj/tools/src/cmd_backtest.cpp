#include <json.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "commands.hpp"
#include "utc/error.hpp"
#include "utc/rng.hpp"
#include "utc/serialization.hpp"

namespace utc::cli {

using nlohmann::json;

namespace {

struct BacktestArgs {
  DataFlags data;
  ModelFlags model;
  GateFlags gate;
  std::vector<std::string> modes = {"utc", "tc", "var", "market"};
  std::vector<std::string> targets;
  std::optional<int> test_start, test_end;
  bool rolling = false;
  int window = 100;
  int retrain_every = 1;
  std::string report_path, series_path;
};

struct StrategyRun {
  std::string name;
  StrategyReturns strategy;
  BacktestReport report;
  std::optional<double> gating_rate;
  Eigen::VectorXd mean_sigma;  // empty without uncertainty
};

int var_lag_for(const RunConfig& cfg, const ReturnPanel& history) {
  return cfg.var_lag > 0 ? cfg.var_lag : select_lag_aic(history, cfg.var_max_lag);
}

ModelFactory company_factory(const RunConfig& cfg, Mode mode, const std::vector<int>& targets,
                             bool rolling) {
  return [cfg, mode, targets, rolling](const ReturnPanel& history, TrainingRange rows,
                                       std::uint64_t index) -> std::unique_ptr<Predictor> {
    TrainConfig train = cfg.train;
    if (rolling) {
      train.seed = SeedTree(cfg.train.seed).seed("retrain", index);
      train.threads = 1;
    }
    BundleTrainResult r = train_bundle(mode, cfg.hyper, train, history, targets, rows);
    return std::make_unique<CompanyPredictor>(std::move(r.bundle));
  };
}

ModelFactory var_factory(const RunConfig& cfg) {
  return [cfg](const ReturnPanel& history, TrainingRange rows,
               std::uint64_t) -> std::unique_ptr<Predictor> {
    const int lag = var_lag_for(cfg, history);
    return std::make_unique<VarPredictor>(fit_var(history, lag, std::max(rows.first + 1, lag)));
  };
}

Eigen::VectorXd mean_finite_columns(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.cols());
  for (Eigen::Index t = 0; t < m.cols(); ++t) {
    double sum = 0.0;
    int n = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (std::isfinite(m(i, t))) {
        sum += m(i, t);
        ++n;
      }
    }
    out[t] = n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::string fixed(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

void print_table(std::ostream& out, const std::vector<StrategyRun>& runs) {
  const int w = 14;
  out << std::left << std::setw(8) << "metric";
  for (const auto& r : runs) out << std::right << std::setw(w) << r.name;
  out << '\n';
  const auto row = [&](const char* label, auto get) {
    out << std::left << std::setw(8) << label;
    for (const auto& r : runs) out << std::right << std::setw(w) << fixed(get(r));
    out << '\n';
  };
  row("AR", [](const StrategyRun& r) { return std::optional<double>(r.report.ar); });
  row("RISK", [](const StrategyRun& r) { return std::optional<double>(r.report.risk); });
  row("SR", [](const StrategyRun& r) { return r.report.sr; });
  row("MDD", [](const StrategyRun& r) { return std::optional<double>(r.report.mdd); });
  row("CR", [](const StrategyRun& r) { return r.report.cr; });
  row("GATED", [](const StrategyRun& r) { return r.gating_rate; });
}

json table_json(const std::vector<StrategyRun>& runs) {
  json columns = json::array();
  json rows = json::object();
  for (const char* key : {"ar", "risk", "sr", "mdd", "cr"}) rows[key] = json::array();
  for (const auto& r : runs) {
    columns.push_back(r.name);
    const json m = json::parse(report_to_json(r.report));
    for (const char* key : {"ar", "risk", "sr", "mdd", "cr"}) rows[key].push_back(m.at(key));
  }
  return {{"columns", columns}, {"rows", rows}};
}

void run_backtest(const BacktestArgs& a, std::ostream& out) {
  RunConfig cfg = a.model.resolve();
  a.gate.apply(cfg);
  if (a.modes.empty()) throw ConfigError("--modes must name at least one strategy");
  for (const auto& m : a.modes) {
    if (m != "utc" && m != "tc" && m != "var" && m != "market") {
      throw ConfigError("unknown strategy '" + m + "' (expected utc, tc, var or market)");
    }
  }
  const bool has_utc = std::find(a.modes.begin(), a.modes.end(), "utc") != a.modes.end();
  RunConfig check = cfg;
  check.mode = has_utc ? "utc" : a.modes.front();
  check.validate();

  const ReturnPanel panel = a.data.load();
  const int n = panel.num_times();
  cfg.hyper.num_stocks = panel.num_stocks();
  const int first = a.test_start.value_or(static_cast<int>(0.8 * (n - 1)));
  const int last = a.test_end.value_or(n - 2);
  if (first < 1 || last > n - 2 || first > last) {
    std::ostringstream os;
    os << "test rows [" << first << ", " << last << "] must lie within [1, " << n - 2 << "]";
    throw ConfigError(os.str());
  }
  const std::vector<int> targets = parse_targets(a.targets, panel);

  RollingSpec rs;
  rs.first_prediction = first;
  rs.last_prediction = last;
  rs.window = a.window;
  rs.retrain_every = a.retrain_every;
  rs.threads = cfg.train.threads;
  if (a.rolling) rs.validate();

  PredictionSeries timeline;
  for (int t = first; t <= last; ++t) timeline.times.push_back(t);
  const ReturnPanel realized = realized_for(panel, timeline);

  const auto predict = [&](const ModelFactory& factory) {
    if (a.rolling) return rolling_backtest(factory, panel, rs).series;
    const TrainingRange rows{cfg.hyper.max_history(), first - 1};
    if (rows.last < rows.first) throw RangeError("no training rows before the test range");
    const auto model = factory(panel.slice(0, first), rows, 0);
    return predict_range(*model, panel, first, last);
  };

  std::vector<StrategyRun> runs;
  for (const auto& m : a.modes) {
    spdlog::info("backtesting {}", m);
    if (m == "market") {
      runs.push_back({m, market_returns(realized), {}, std::nullopt, {}});
    } else if (m == "var") {
      const PredictionSeries s = predict(var_factory(cfg));
      runs.push_back({m, strategy_returns(s.means, realized), {}, std::nullopt, {}});
    } else {
      const Mode mode = parse_mode(m);
      const PredictionSeries s = predict(company_factory(cfg, mode, targets, a.rolling));
      Eigen::VectorXd sig;
      if (mode == Mode::UTC) sig = mean_finite_columns(s.sigmas);
      if (mode == Mode::UTC && cfg.gate) {
        const GateResult g = uncertainty_gate(s.means, s.sigmas, cfg.filter);
        runs.push_back({m, strategy_returns(g.predictions, realized), {}, g.rate(), sig});
        runs.push_back({"utc_ungated", strategy_returns(s.means, realized), {}, std::nullopt, {}});
      } else {
        runs.push_back({m, strategy_returns(s.means, realized), {}, std::nullopt, sig});
      }
    }
  }
  for (auto& r : runs) r.report = compute_metrics(r.strategy.returns, cfg.t_y);

  print_table(out, runs);

  if (!a.report_path.empty()) {
    json strategies = json::object();
    for (const auto& r : runs) {
      json s = json::parse(report_to_json(r.report));
      if (r.gating_rate) {
        s["gated"] = true;
        s["gating_rate"] = *r.gating_rate;
      }
      strategies[r.name] = std::move(s);
    }
    json cfg_json = to_json(cfg);
    cfg_json.erase("mode");
    const json report = {
        {"format_version", kModelFormatVersion},
        {"config", cfg_json},
        {"test",
         {{"first_row", first},
          {"last_row", last},
          {"periods", last - first + 1},
          {"first_origin", panel.timestamps()[static_cast<std::size_t>(first)]},
          {"last_origin", panel.timestamps()[static_cast<std::size_t>(last)]}}},
        {"rolling",
         a.rolling ? json{{"window", a.window}, {"retrain_every", a.retrain_every}} : json(nullptr)},
        {"strategies", strategies},
        {"table", table_json(runs)}};
    save_text(a.report_path, report.dump(2));
  }
  if (!a.series_path.empty()) {
    std::vector<std::pair<std::string, Eigen::VectorXd>> series;
    for (const auto& r : runs) {
      series.emplace_back(r.name + ".R", r.strategy.returns);
      series.emplace_back(r.name + ".C", r.report.cumulative);
      if (r.mean_sigma.size() > 0) series.emplace_back(r.name + ".sigma", r.mean_sigma);
    }
    std::ofstream f(a.series_path);
    if (!f) throw InputError("cannot write " + a.series_path);
    write_series_csv(f, realized.timestamps(), series);
  }
}

}  // namespace

void add_backtest(CLI::App& app, std::ostream& out) {
  auto args = std::make_shared<BacktestArgs>();
  CLI::App* sub = app.add_subcommand("backtest", "simulate sign strategies and report metrics");
  args->data.attach(*sub);
  args->model.attach(*sub, false);
  args->gate.attach(*sub);
  sub->add_option("--modes", args->modes, "strategies: utc, tc, var, market")->delimiter(',');
  sub->add_option("--targets", args->targets, "symbols traded by TC / UTC (default: all)")
      ->delimiter(',');
  sub->add_option("--test-start", args->test_start, "first forecast origin row (default: 80%)");
  sub->add_option("--test-end", args->test_end, "last forecast origin row (default: T - 2)");
  sub->add_flag("--rolling", args->rolling, "retrain on a trailing window while testing");
  sub->add_option("--window", args->window, "training rows per rolling model")->default_val(100);
  sub->add_option("--retrain-every", args->retrain_every, "forecasts per rolling model")
      ->default_val(1);
  sub->add_option("--report", args->report_path, "report JSON");
  sub->add_option("--series", args->series_path, "tidy series CSV (timestamp,series,value)");
  sub->callback([args, &out] { run_backtest(*args, out); });
}

}  // namespace utc::cli
