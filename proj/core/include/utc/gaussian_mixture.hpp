#pragma once

#include <Eigen/Dense>

#include <vector>

#include "utc/rng.hpp"

namespace utc {

/// K-component mixture of full-covariance Gaussians in D dimensions.
struct GaussianMixture {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
  /// Throws InputError on inconsistent shapes or weights off the simplex.
  void validate() const;
};

struct EmConfig {
  double tol = 1e-6;        // stop when the log-likelihood gain drops below this
  int max_iter = 200;
  int restarts = 3;         // k-means++ initialisations; best final likelihood wins
  double cov_floor = 1e-6;  // lower bound on covariance eigenvalues
  double empty_mass = 1e-8; // components with less responsibility are re-seeded
};

struct EmFit {
  GaussianMixture mixture;
  double log_likelihood = 0.0;
  int iterations = 0;
  /// Log-likelihood at every E-step of the winning restart.
  std::vector<double> trace;
  /// Largest decrease between consecutive E-steps over all restarts, ignoring
  /// steps right after a component re-seed. Non-positive means monotone.
  double worst_decrease = 0.0;
  int reseeds = 0;
};

/// EM fit on `samples` (one row per observation). Covariance eigenvalues are
/// floored at `cov_floor`, which is the constrained M-step and keeps the
/// iteration monotone. Throws InputError when there are fewer rows than K.
EmFit fit_em(const Eigen::MatrixXd& samples, int components, const EmConfig& config, Engine& rng);

/// Convenience wrapper returning only the mixture.
GaussianMixture fit_gaussian_mixture(const Eigen::MatrixXd& samples, int components,
                                     const EmConfig& config, Engine& rng);

/// n draws, one row each. Components are picked by a categorical draw on the
/// weights; each draw is mean + U sqrt(Lambda) e with the eigen-factorisation
/// of the component covariance, so singular covariances are fine.
Eigen::MatrixXd sample(const GaussianMixture& gm, int n, Engine& rng);

/// Sum over rows of log sum_k w_k N(x | mu_k, Sigma_k), in log space.
double log_likelihood(const GaussianMixture& gm, const Eigen::MatrixXd& samples);

}  // namespace utc
