#include "utc/var_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "utc/error.hpp"

namespace utc {

namespace {

// Row t of the design: [1, y_{t-1}', ..., y_{t-p}'].
void fill_regressors(const Eigen::MatrixXd& y, int t, int lag, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
  const Eigen::Index s = y.rows();
  row[0] = 1.0;
  for (int k = 1; k <= lag; ++k) row.segment(1 + (k - 1) * s, s) = y.col(t - k).transpose();
}

}  // namespace

VarModel fit_var(const ReturnPanel& panel, int lag) { return fit_var(panel, lag, lag); }

VarModel fit_var(const ReturnPanel& panel, int lag, int first_target) {
  if (lag < 1) throw ConfigError("VAR lag must be >= 1");
  if (first_target < lag) throw ConfigError("first VAR target must be >= lag");
  const Eigen::MatrixXd& y = panel.returns();
  const int s = panel.num_stocks();
  const int rows = panel.num_times() - first_target;
  const int cols = 1 + s * lag;
  if (rows <= cols) {
    std::ostringstream os;
    os << "VAR(" << lag << ") on " << s << " series needs more than " << cols
       << " usable rows, got " << rows;
    throw InputError(os.str());
  }

  Eigen::MatrixXd x(rows, cols);
  Eigen::MatrixXd target(rows, s);
  for (int r = 0; r < rows; ++r) {
    const int t = first_target + r;
    fill_regressors(y, t, lag, x.row(r));
    target.row(r) = y.col(t).transpose();
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) {
    std::ostringstream os;
    os << "VAR(" << lag << ") design is singular (rank " << qr.rank() << " of " << cols
       << "); try fewer lags or check for constant series";
    throw SingularError(os.str());
  }
  const Eigen::MatrixXd beta = qr.solve(target);  // cols x s
  const Eigen::MatrixXd resid = target - x * beta;

  VarModel m;
  m.lag = lag;
  m.effective_samples = rows;
  m.intercept = beta.row(0).transpose();
  for (int k = 0; k < lag; ++k) {
    m.coefficients.push_back(beta.middleRows(1 + k * s, s).transpose());
  }
  m.residual_cov = resid.transpose() * resid / static_cast<double>(rows);
  return m;
}

double var_aic(const VarModel& model) {
  const int s = model.num_series();
  const double k = static_cast<double>(s) * (static_cast<double>(s) * model.lag + 1.0);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(model.residual_cov);
  const Eigen::VectorXd d = ldlt.vectorD();
  if (d.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
  const double log_det = d.array().log().sum();
  return log_det + 2.0 * k / static_cast<double>(model.effective_samples);
}

int select_lag_aic(const ReturnPanel& panel, int max_lag) {
  if (max_lag < 1) throw ConfigError("maximum VAR lag must be >= 1");
  int best = 1;
  double best_aic = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= max_lag; ++p) {
    const double aic = var_aic(fit_var(panel, p, max_lag));
    if (aic < best_aic) {
      best_aic = aic;
      best = p;
    }
  }
  return best;
}

Eigen::VectorXd predict_var(const VarModel& model, const ReturnPanel& panel, int t) {
  if (panel.num_stocks() != model.num_series()) {
    throw InputError("panel width does not match the VAR model");
  }
  if (t - model.lag + 1 < 0 || t >= panel.num_times()) {
    std::ostringstream os;
    os << "VAR(" << model.lag << ") prediction at t=" << t << " needs t >= " << model.lag - 1
       << " and t < " << panel.num_times();
    throw RangeError(os.str());
  }
  Eigen::VectorXd out = model.intercept;
  for (int k = 0; k < model.lag; ++k) {
    out += model.coefficients[static_cast<std::size_t>(k)] * panel.returns().col(t - k);
  }
  return out;
}

Eigen::MatrixXd var_residuals(const VarModel& model, const ReturnPanel& panel, int first_target) {
  const int n = panel.num_times() - first_target;
  Eigen::MatrixXd out(model.num_series(), std::max(n, 0));
  for (int t = first_target; t < panel.num_times(); ++t) {
    out.col(t - first_target) = panel.returns().col(t) - predict_var(model, panel, t - 1);
  }
  return out;
}

}  // namespace utc
