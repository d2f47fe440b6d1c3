#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "utc/returns.hpp"
#include "utc/rng.hpp"

namespace utc {

enum class Activation { Identity, Tanh, Exp, Sign, ReLU };
enum class Operator { Add, Sub, Mul, Left, Right, Max, Min, Greater, Less, Corr };

inline constexpr int kNumActivations = 5;
inline constexpr int kNumOperators = 10;

/// Window of the Corr operator, in periods.
inline constexpr int kCorrelationWindow = 10;

/// Operands of Exp are clamped to [-kExpClamp, kExpClamp].
inline constexpr double kExpClamp = 20.0;

std::string_view to_string(Activation a);
std::string_view to_string(Operator op);
std::optional<Activation> parse_activation(std::string_view tag);
std::optional<Operator> parse_operator(std::string_view tag);

double apply_activation(Activation a, double x);
/// Scalar operators only; Corr has no pointwise form and throws.
double apply_operator(Operator op, double x, double y);

/// Pearson correlation of two equal-length windows; 0 if either is flat.
double pearson(const double* x, const double* y, int n);

/// One nonlinear term: act(op(r_p[t - d], r_q[t - f])).
struct TermParams {
  int p = 0;
  int q = 0;
  int d = 0;
  int f = 0;
  Operator op = Operator::Add;
  Activation act = Activation::Identity;

  friend bool operator==(const TermParams&, const TermParams&) = default;
};

/// Discrete structure of a Trader predicting r_target[t + 1].
struct TraderParams {
  int target_stock = 0;
  std::vector<TermParams> terms;

  int num_terms() const { return static_cast<int>(terms.size()); }
  /// Smallest t at which every term can be evaluated.
  int required_history() const;

  friend bool operator==(const TraderParams&, const TraderParams&) = default;
};

/// Gaussian over the term weights. The TC baseline is the case cov == 0.
struct WeightPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  static WeightPosterior point(Eigen::VectorXd mean);
  static WeightPosterior isotropic(Eigen::VectorXd mean, double variance);
};

struct Trader {
  TraderParams params;
  WeightPosterior weights;
};

/// Domains sampled from and clamped to when generating traders.
struct TraderHyperParams {
  int max_terms = 10;
  int max_delay = 10;
  int num_stocks = 1;
  double weight_bound = 1.0;  // initial weight means ~ U[-bound, bound]

  void validate() const;
  /// Largest lag any admissible trader can need (delay plus Corr window).
  int max_history() const { return max_delay + kCorrelationWindow - 1; }
};

struct TraderPrediction {
  double mean = 0.0;
  double sigma = 0.0;
  double variance = 0.0;  // z' Sigma z before clamping
};

/// Signal vector z with z[j] = A_j(O_j(r_P[t - D], r_Q[t - F])).
Eigen::VectorXd compute_signal(const TraderParams& params, const ReturnPanel& panel, int t);

/// Writes the signal into `out` (size M) without allocating; no range checks.
void compute_signal_unchecked(const TraderParams& params, const ReturnPanel& panel, int t,
                              double* out);

/// Throws RangeError if the trader cannot be evaluated at t.
void check_signal_range(const TraderParams& params, const ReturnPanel& panel, int t);

/// Point prediction m'z of r_target[t + 1].
double predict_point(const Trader& trader, const ReturnPanel& panel, int t);

/// (m'z, sqrt(z' Sigma z)).
TraderPrediction predict_with_uncertainty(const Trader& trader, const ReturnPanel& panel, int t);

/// sign(x) with sign(0) = 0.
inline double signum(double x) { return (x > 0.0) - (x < 0.0); }

/// Sum over u in [first, last] of sign(predict_point(u)) * r_target[u + 1].
double cumulative_return(const Trader& trader, const ReturnPanel& panel, int first, int last);

/// Uniform draw over the hyper-parameter domains. Weight means are uniform
/// on [-weight_bound, weight_bound]; covariance is initial_variance * I.
Trader sample_random_trader(const TraderHyperParams& hyper, int target_stock,
                            double initial_variance, Engine& rng);

}  // namespace utc
