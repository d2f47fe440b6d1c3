#include "utc/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "utc/csv_io.hpp"
#include "utc/error.hpp"
#include "utc/parallel.hpp"

namespace utc {

double StrategyReturns::recompute_error() const {
  double worst = 0.0;
  for (Eigen::Index t = 0; t < returns.size(); ++t) {
    const double r =
        (positions.col(t).cast<double>().array() * realized.col(t).array()).mean();
    worst = std::max(worst, std::abs(r - returns[t]));
  }
  return worst;
}

StrategyReturns strategy_returns(const Eigen::MatrixXd& predictions, const ReturnPanel& realized) {
  if (predictions.rows() != realized.num_stocks() || predictions.cols() != realized.num_times()) {
    std::ostringstream os;
    os << "predictions are " << predictions.rows() << "x" << predictions.cols()
       << " but realised returns are " << realized.num_stocks() << "x" << realized.num_times();
    throw InputError(os.str());
  }
  StrategyReturns out;
  out.timestamps = realized.timestamps();
  out.realized = realized.returns();
  out.positions = predictions.unaryExpr([](double x) { return static_cast<int>(signum(x)); });
  out.returns.resize(realized.num_times());
  for (int t = 0; t < realized.num_times(); ++t) {
    out.returns[t] =
        (out.positions.col(t).cast<double>().array() * out.realized.col(t).array()).mean();
  }
  return out;
}

StrategyReturns market_returns(const ReturnPanel& realized) {
  return strategy_returns(Eigen::MatrixXd::Ones(realized.num_stocks(), realized.num_times()),
                          realized);
}

void UncertaintyFilterConfig::validate() const {
  if (lookback < 1) throw ConfigError("gate lookback must be >= 1");
  if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("gate quantile must lie in (0, 1)");
  if (min_history < 1) throw ConfigError("gate min_history must be >= 1");
}

double interpolated_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

GateResult uncertainty_gate(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& sigmas,
                            const UncertaintyFilterConfig& config) {
  config.validate();
  if (predictions.rows() != sigmas.rows() || predictions.cols() != sigmas.cols()) {
    throw InputError("sigmas must be aligned with predictions");
  }
  GateResult out{predictions, 0, 0};
  const Eigen::Index s_count = predictions.rows();
  const Eigen::Index n = predictions.cols();
  std::vector<double> history;
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index from = std::max<Eigen::Index>(0, t - config.lookback);
    std::optional<double> pooled;
    if (config.pool_stocks) {
      history.clear();
      for (Eigen::Index u = from; u < t; ++u) {
        for (Eigen::Index i = 0; i < s_count; ++i) {
          if (std::isfinite(sigmas(i, u))) history.push_back(sigmas(i, u));
        }
      }
      if (static_cast<int>(history.size()) >= config.min_history) {
        pooled = interpolated_quantile(history, config.quantile);
      }
    }
    for (Eigen::Index i = 0; i < s_count; ++i) {
      const double sigma = sigmas(i, t);
      if (!std::isfinite(sigma)) continue;
      std::optional<double> threshold = pooled;
      if (!config.pool_stocks) {
        history.clear();
        for (Eigen::Index u = from; u < t; ++u) {
          if (std::isfinite(sigmas(i, u))) history.push_back(sigmas(i, u));
        }
        if (static_cast<int>(history.size()) >= config.min_history) {
          threshold = interpolated_quantile(history, config.quantile);
        }
      }
      if (!threshold) continue;
      ++out.eligible;
      const bool high = sigma > *threshold;
      if (high != config.invert) {
        if (out.predictions(i, t) != 0.0) ++out.gated;
        out.predictions(i, t) = 0.0;
      }
    }
  }
  return out;
}

BacktestReport compute_metrics(const Eigen::VectorXd& returns, double t_y) {
  const Eigen::Index n = returns.size();
  if (n < 2) throw InputError("metrics need at least two periods");
  if (!(t_y > 0.0)) throw ConfigError("annualisation constant must be > 0");
  BacktestReport rep;
  rep.t_y = t_y;
  const double mean = returns.mean();
  const double var = (returns.array() - mean).square().sum() / static_cast<double>(n - 1);
  rep.ar = t_y * mean;
  rep.risk = std::sqrt(t_y) * std::sqrt(var);
  if (rep.risk > 0.0) rep.sr = rep.ar / rep.risk;

  rep.cumulative.resize(n);
  double c = 0.0, peak = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < n; ++t) {
    c += returns[t];
    rep.cumulative[t] = c;
    peak = std::max(peak, c);
    rep.mdd = std::max(rep.mdd, peak - c);
  }
  if (rep.mdd > 0.0) rep.cr = rep.ar / rep.mdd;

  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index s = t + 1; s < n; ++s) {
      if (rep.cumulative[s] == 0.0) continue;
      const double v = 1.0 - rep.cumulative[t] / rep.cumulative[s];
      if (!rep.mdd_ratio || v > *rep.mdd_ratio) rep.mdd_ratio = v;
    }
  }
  return rep;
}

bool CompanyPredictor::has_uncertainty() const {
  return std::any_of(bundle_.companies.begin(), bundle_.companies.end(),
                     [](const Company& c) { return c.mode == Mode::UTC; });
}

void CompanyPredictor::predict(const ReturnPanel& panel, int t, Eigen::Ref<Eigen::VectorXd> mean,
                               Eigen::Ref<Eigen::VectorXd> sigma) const {
  mean.setZero();
  sigma.setConstant(std::numeric_limits<double>::quiet_NaN());
  for (const auto& c : bundle_.companies) {
    const PredictionWithUncertainty p = aggregate_predict(c, panel, t);
    mean[c.target_stock] = p.mean;
    if (c.mode == Mode::UTC) sigma[c.target_stock] = p.sigma;
  }
}

void VarPredictor::predict(const ReturnPanel& panel, int t, Eigen::Ref<Eigen::VectorXd> mean,
                           Eigen::Ref<Eigen::VectorXd> sigma) const {
  mean = predict_var(model_, panel, t);
  sigma.setConstant(std::numeric_limits<double>::quiet_NaN());
}

PredictionSeries predict_range(const Predictor& model, const ReturnPanel& panel, int first,
                               int last) {
  if (last < first) throw RangeError("empty prediction range");
  PredictionSeries out;
  const int n = last - first + 1;
  out.means.resize(panel.num_stocks(), n);
  out.sigmas.resize(panel.num_stocks(), n);
  for (int k = 0; k < n; ++k) {
    out.times.push_back(first + k);
    model.predict(panel, first + k, out.means.col(k), out.sigmas.col(k));
  }
  return out;
}

ReturnPanel realized_for(const ReturnPanel& panel, const PredictionSeries& series) {
  Eigen::MatrixXd r(panel.num_stocks(), static_cast<Eigen::Index>(series.times.size()));
  std::vector<std::string> ts;
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    const int t = series.times[k] + 1;
    if (t >= panel.num_times()) throw RangeError("realised return beyond the panel end");
    r.col(static_cast<Eigen::Index>(k)) = panel.returns().col(t);
    ts.push_back(panel.timestamps()[static_cast<std::size_t>(t)]);
  }
  return ReturnPanel(panel.symbols(), std::move(ts), std::move(r));
}

void RollingSpec::validate() const {
  if (window < 1) throw ConfigError("rolling window must be >= 1");
  if (retrain_every < 1) throw ConfigError("retrain interval must be >= 1");
  if (last_prediction < first_prediction) throw ConfigError("empty rolling prediction range");
  if (first_prediction - window < 0) {
    throw ConfigError("first prediction leaves fewer than `window` training rows");
  }
}

RollingResult rolling_backtest(const ModelFactory& factory, const ReturnPanel& panel,
                               const RollingSpec& spec) {
  spec.validate();
  if (spec.last_prediction + 1 >= panel.num_times()) {
    throw RangeError("last prediction needs its realised return inside the panel");
  }
  std::vector<int> starts;
  for (int t = spec.first_prediction; t <= spec.last_prediction; t += spec.retrain_every) {
    starts.push_back(t);
  }
  const int n = spec.last_prediction - spec.first_prediction + 1;
  RollingResult out;
  out.series.means.resize(panel.num_stocks(), n);
  out.series.sigmas.resize(panel.num_stocks(), n);
  for (int k = 0; k < n; ++k) out.series.times.push_back(spec.first_prediction + k);

  parallel_for(static_cast<int>(starts.size()), spec.threads, [&](int b) {
    const int start = starts[static_cast<std::size_t>(b)];
    const int stop = std::min(start + spec.retrain_every - 1, spec.last_prediction);
    const ReturnPanel history = panel.slice(0, start);
    const TrainingRange rows{start - spec.window, start - 1};
    const std::unique_ptr<Predictor> model =
        factory(history, rows, static_cast<std::uint64_t>(b));
    for (int t = start; t <= stop; ++t) {
      const int k = t - spec.first_prediction;
      model->predict(panel, t, out.series.means.col(k), out.series.sigmas.col(k));
    }
  });
  out.strategy = strategy_returns(out.series.means, realized_for(panel, out.series));
  return out;
}

void write_series_csv(std::ostream& out, const std::vector<std::string>& timestamps,
                      const std::vector<std::pair<std::string, Eigen::VectorXd>>& series) {
  out << "timestamp,series,value\n";
  for (const auto& [name, values] : series) {
    if (values.size() != static_cast<Eigen::Index>(timestamps.size())) {
      throw InputError("series '" + name + "' does not match the timestamp count");
    }
    for (Eigen::Index t = 0; t < values.size(); ++t) {
      out << timestamps[static_cast<std::size_t>(t)] << ',' << name << ','
          << (std::isfinite(values[t]) ? format_double(values[t]) : std::string()) << '\n';
    }
  }
}

}  // namespace utc
