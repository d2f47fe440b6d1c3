#pragma once

#include <Eigen/Dense>

#include <vector>

#include "utc/returns.hpp"

namespace utc {

/// y_{t+1} = c + A_1 y_t + ... + A_p y_{t-p+1} + e,  e ~ N(0, residual_cov).
struct VarModel {
  int lag = 1;
  Eigen::VectorXd intercept;
  std::vector<Eigen::MatrixXd> coefficients;  // A_1 .. A_p, each S x S
  Eigen::MatrixXd residual_cov;
  int effective_samples = 0;

  int num_series() const { return static_cast<int>(intercept.size()); }
};

/// Multivariate least squares of y_t on [1, y_{t-1}, ..., y_{t-p}] for every
/// t in [p, T). Residual covariance uses the denominator T - p. Throws
/// SingularError if the design is rank deficient.
VarModel fit_var(const ReturnPanel& panel, int lag);

/// As fit_var, but only targets y_t with t >= first_target (>= lag). Used to
/// compare lags on a common sample.
VarModel fit_var(const ReturnPanel& panel, int lag, int first_target);

/// ln det(residual_cov) + 2 k / T_eff with k = S (S p + 1).
double var_aic(const VarModel& model);

/// Lag in [1, max_lag] with the smallest AIC, all fitted on targets
/// t >= max_lag. Ties go to the smaller lag.
int select_lag_aic(const ReturnPanel& panel, int max_lag);

/// One-step conditional mean of y_{t+1} from y_t, ..., y_{t-p+1}.
Eigen::VectorXd predict_var(const VarModel& model, const ReturnPanel& panel, int t);

/// In-sample residuals for targets t >= first_target, one column per target time.
Eigen::MatrixXd var_residuals(const VarModel& model, const ReturnPanel& panel, int first_target);

}  // namespace utc
