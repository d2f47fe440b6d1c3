#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "utc/company.hpp"
#include "utc/returns.hpp"
#include "utc/var_model.hpp"

namespace utc {

/// Per-period strategy return R[t] = mean_i(position_i[t] * r_i[t]).
struct StrategyReturns {
  std::vector<std::string> timestamps;
  Eigen::VectorXd returns;
  Eigen::MatrixXi positions;  // S x T, entries in {-1, 0, +1}
  Eigen::MatrixXd realized;   // S x T

  /// Largest |R[t] - mean_i(position * realized)| over t.
  double recompute_error() const;
};

/// Positions sign(prediction); flat stocks still count in the mean.
StrategyReturns strategy_returns(const Eigen::MatrixXd& predictions, const ReturnPanel& realized);

/// Equal-weight long book: positions all +1.
StrategyReturns market_returns(const ReturnPanel& realized);

struct UncertaintyFilterConfig {
  int lookback = 250;       // trailing sigmas considered
  double quantile = 0.9;    // threshold quantile of the trailing sigmas
  int min_history = 20;     // no gating before this many trailing sigmas exist
  bool invert = false;      // keep only high-sigma positions instead
  bool pool_stocks = false; // one threshold from all stocks' trailing sigmas

  void validate() const;
};

struct GateResult {
  Eigen::MatrixXd predictions;
  int gated = 0;     // positions suppressed
  int eligible = 0;  // (i, t) cells where a threshold existed

  double rate() const { return eligible > 0 ? static_cast<double>(gated) / eligible : 0.0; }
};

/// Zeroes prediction (i, t) when sigma(i, t) exceeds the configured quantile
/// of the stock's trailing sigmas (strictly greater). Non-finite sigmas never gate.
GateResult uncertainty_gate(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& sigmas,
                            const UncertaintyFilterConfig& config);

/// Linear-interpolation quantile of a non-empty sample.
double interpolated_quantile(std::vector<double> values, double q);

struct BacktestReport {
  double ar = 0.0;
  double risk = 0.0;
  std::optional<double> sr;         // undefined when risk == 0
  double mdd = 0.0;                 // additive peak-to-trough drop, >= 0
  std::optional<double> mdd_ratio;  // max_{t < s} (1 - C[t] / C[s]) where C[s] != 0
  std::optional<double> cr;         // ar / mdd, undefined when mdd == 0
  double t_y = 250.0;
  Eigen::VectorXd cumulative;       // C[t] = sum_{j <= t} R[j]
};

/// AR, RISK, SR, MDD and CR of a return series of length >= 2.
BacktestReport compute_metrics(const Eigen::VectorXd& returns, double t_y);

/// Predicts r[t + 1] for every stock from data up to t.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual bool has_uncertainty() const = 0;
  /// Fills `mean` and `sigma` (length S); sigma is NaN without uncertainty.
  virtual void predict(const ReturnPanel& panel, int t, Eigen::Ref<Eigen::VectorXd> mean,
                       Eigen::Ref<Eigen::VectorXd> sigma) const = 0;
};

/// Stocks without a company predict 0 (flat).
class CompanyPredictor final : public Predictor {
 public:
  explicit CompanyPredictor(CompanyBundle bundle) : bundle_(std::move(bundle)) {}
  bool has_uncertainty() const override;
  void predict(const ReturnPanel& panel, int t, Eigen::Ref<Eigen::VectorXd> mean,
               Eigen::Ref<Eigen::VectorXd> sigma) const override;
  const CompanyBundle& bundle() const { return bundle_; }

 private:
  CompanyBundle bundle_;
};

class VarPredictor final : public Predictor {
 public:
  explicit VarPredictor(VarModel model) : model_(std::move(model)) {}
  bool has_uncertainty() const override { return false; }
  void predict(const ReturnPanel& panel, int t, Eigen::Ref<Eigen::VectorXd> mean,
               Eigen::Ref<Eigen::VectorXd> sigma) const override;
  const VarModel& model() const { return model_; }

 private:
  VarModel model_;
};

struct PredictionSeries {
  std::vector<int> times;       // prediction times t; each column forecasts r[t + 1]
  Eigen::MatrixXd means;        // S x n
  Eigen::MatrixXd sigmas;       // S x n, NaN without uncertainty
};

/// One model predicting every t in [first, last].
PredictionSeries predict_range(const Predictor& model, const ReturnPanel& panel, int first,
                               int last);

/// Realised returns aligned with a prediction series: column k is r[times[k] + 1].
ReturnPanel realized_for(const ReturnPanel& panel, const PredictionSeries& series);

/// Builds a model from the panel truncated at the retrain time and the
/// training rows (prediction times) it should use.
using ModelFactory = std::function<std::unique_ptr<Predictor>(
    const ReturnPanel& history, TrainingRange rows, std::uint64_t retrain_index)>;

struct RollingSpec {
  int first_prediction = 0;
  int last_prediction = 0;
  int window = 100;        // training rows per model
  int retrain_every = 1;   // predictions per model
  int threads = 1;

  void validate() const;
};

struct RollingResult {
  PredictionSeries series;
  StrategyReturns strategy;
};

/// Walk-forward evaluation: at each retrain point t_k a fresh model is trained
/// on rows [t_k - window, t_k - 1] (targets up to r[t_k]) and predicts
/// t_k .. t_k + retrain_every - 1. Blocks may be trained in parallel and are
/// stitched in time order.
RollingResult rolling_backtest(const ModelFactory& factory, const ReturnPanel& panel,
                               const RollingSpec& spec);

/// Tidy CSV rows "timestamp,series,value".
void write_series_csv(std::ostream& out, const std::vector<std::string>& timestamps,
                      const std::vector<std::pair<std::string, Eigen::VectorXd>>& series);

}  // namespace utc
