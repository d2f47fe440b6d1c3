#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "utc/gaussian_mixture.hpp"
#include "utc/returns.hpp"
#include "utc/trader.hpp"

namespace utc {

enum class Mode { TC, UTC };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view tag);

struct TrainConfig {
  int num_traders = 200;     // N
  double prune_ratio = 0.1;  // Q
  int fit_rounds = 2;        // F, Prune-and-Generate repetitions per round
  int rounds = 5;            // outer Educate / Prune-and-Generate rounds
  double noise_var = 0.01;   // sigma^2
  double prior_var = 1.0;    // sigma_0^2
  int gm_components = 3;     // K
  std::uint64_t seed = 0;
  EmConfig em;
  int threads = 1;

  void validate() const;
  /// Ridge penalty matching the MAP update: sigma^2 / sigma_0^2.
  double ridge_lambda() const { return noise_var / prior_var; }
};

/// Inclusive range of prediction times u; the realised target is r[u + 1].
struct TrainingRange {
  int first = 0;
  int last = 0;

  int size() const { return last - first + 1; }
};

struct PredictionWithUncertainty {
  double mean = 0.0;
  double intra_var = 0.0;  // spread of trader means around the company mean
  double inter_var = 0.0;  // average of trader posterior variances
  double sigma = 0.0;      // sqrt(intra_var + inter_var)
};

/// A population of Traders that all predict the same target stock.
struct Company {
  Mode mode = Mode::UTC;
  TraderHyperParams hyper;
  TrainConfig config;
  int target_stock = 0;
  std::uint64_t generation = 0;  // Prune-and-Generate calls so far; indexes rng streams
  std::vector<Trader> traders;

  int size() const { return static_cast<int>(traders.size()); }
  void validate() const;
  /// Covariance assigned to freshly sampled traders: sigma_0^2 I in UTC, 0 in TC.
  double initial_variance() const { return mode == Mode::UTC ? config.prior_var : 0.0; }
};

/// N random traders drawn from the "trader-init" stream of the config seed.
Company make_company(Mode mode, const TraderHyperParams& hyper, const TrainConfig& config,
                     int target_stock);

/// Simple-average aggregation with the intra/inter variance split.
PredictionWithUncertainty aggregate_predict(const Company& company, const ReturnPanel& panel,
                                            int t);

/// Signals stacked over the range (rows) and the realised next-period targets.
struct Design {
  Eigen::MatrixXd z;
  Eigen::VectorXd y;
};

Design build_design(const TraderParams& params, const ReturnPanel& panel, TrainingRange range);

/// (Z'Z + lambda I)^{-1} Z'Y. Throws SingularError when the system is singular.
Eigen::VectorXd ridge_solution(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double lambda);

/// Gaussian posterior of the weights under w ~ N(0, prior_var I) and
/// y | w ~ N(Zw, noise_var I): Sigma = (Z'Z / noise_var + I / prior_var)^{-1},
/// m = Sigma Z'Y / noise_var.
WeightPosterior bayes_posterior(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                double noise_var, double prior_var);

/// Least-squares (ridge) refit of the weights; covariance set to zero.
Trader educate_tc(const Trader& trader, const ReturnPanel& panel, TrainingRange range,
                  double lambda);

/// MAP refit of the weight posterior.
Trader educate_utc(const Trader& trader, const ReturnPanel& panel, TrainingRange range,
                   double noise_var, double prior_var);

/// Cumulative sign-trading return of every trader, in company order.
std::vector<double> evaluate_traders(const Company& company, const ReturnPanel& panel,
                                     TrainingRange range);

/// Nearest-rank lower Q-quantile: sorted[max(ceil(Q n), 1) - 1].
double lower_quantile(std::vector<double> values, double q);

/// Indices with R_n <= lower_quantile(R, Q), ascending.
std::vector<int> select_bottom(const std::vector<double>& returns, double q);

/// Exactly max(ceil(Q n), 1) indices (at most n - 1) with the lowest R_n; ties
/// go to the lower index. Returned ascending.
std::vector<int> select_prune(const std::vector<double>& returns, double q);

struct EducateResult {
  Company company;
  std::vector<int> educated;
};

/// Re-educates the traders with R_n <= R* (least squares in TC, MAP in UTC).
EducateResult educate_step(const Company& company, const ReturnPanel& panel,
                           TrainingRange range);

/// Continuous encoding of (theta, m): [M, (p, q, d, f, op, act, w) x max_terms].
/// Slots past M are zero.
int encoding_size(const TraderHyperParams& hyper);
Eigen::VectorXd encode_params(const Trader& trader, const TraderHyperParams& hyper);

/// Inverse of encode_params. Integers are rounded to nearest and clamped to
/// their domains; the covariance is initial_variance * I.
Trader decode_params(const Eigen::VectorXd& encoded, const TraderHyperParams& hyper,
                     int target_stock, double initial_variance);

struct PruneResult {
  Company company;
  int pruned = 0;        // summed over the F repetitions
  int fallbacks = 0;     // repetitions that used random sampling instead of the mixture
};

/// F repetitions of: evaluate, drop the bottom-Q traders, fit a K-component
/// mixture to the survivors' encodings and refill the population from it.
PruneResult prune_and_generate(const Company& company, const ReturnPanel& panel,
                               TrainingRange range);

struct RoundStats {
  int round = 0;
  double mean_r = 0.0;
  double min_r = 0.0;
  double max_r = 0.0;
  int n_educated = 0;
  int n_pruned = 0;
};

struct TrainResult {
  Company company;
  RoundStats initial;  // population before the first round (round 0)
  std::vector<RoundStats> rounds;
};

/// config.rounds iterations of: educate_step, prune_and_generate, aggregation
/// update (simple averaging has no parameters). `rounds` < 0 uses the config value.
TrainResult train(const Company& company, const ReturnPanel& panel, TrainingRange range,
                  int rounds = -1);

/// Rows usable for training on a panel: every admissible trader can be
/// evaluated at `first` and r[last + 1] exists.
TrainingRange full_training_range(const TraderHyperParams& hyper, const ReturnPanel& panel);

/// One company per target symbol.
struct CompanyBundle {
  std::vector<std::string> symbols;  // panel universe the traders index into
  std::vector<Company> companies;

  /// Company predicting `stock`, or nullptr.
  const Company* find(int stock) const;
};

struct BundleTrainResult {
  CompanyBundle bundle;
  std::vector<std::vector<RoundStats>> rounds;  // per company, round 0 (untrained) first
};

/// Trains an independent company for each target index. Targets are trained
/// in parallel up to config.threads; results are ordered as `targets`.
BundleTrainResult train_bundle(Mode mode, const TraderHyperParams& hyper,
                               const TrainConfig& config, const ReturnPanel& panel,
                               const std::vector<int>& targets, TrainingRange range);

}  // namespace utc
