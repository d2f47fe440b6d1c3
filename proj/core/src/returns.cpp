#include "utc/returns.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "utc/error.hpp"

namespace utc {

namespace {

void check_shape(std::size_t symbols, std::size_t timestamps, const Eigen::MatrixXd& m,
                 const char* what) {
  if (static_cast<Eigen::Index>(symbols) != m.rows() ||
      static_cast<Eigen::Index>(timestamps) != m.cols()) {
    std::ostringstream os;
    os << what << ": matrix is " << m.rows() << "x" << m.cols() << " but there are " << symbols
       << " symbols and " << timestamps << " timestamps";
    throw InputError(os.str());
  }
}

void check_increasing(const std::vector<std::string>& timestamps) {
  for (std::size_t t = 1; t < timestamps.size(); ++t) {
    if (!(timestamps[t - 1] < timestamps[t])) {
      throw InputError("timestamps must be strictly increasing: '" + timestamps[t - 1] +
                       "' is followed by '" + timestamps[t] + "'");
    }
  }
}

}  // namespace

PricePanel::PricePanel(std::vector<std::string> symbols, std::vector<std::string> timestamps,
                       Eigen::MatrixXd prices)
    : symbols_(std::move(symbols)), timestamps_(std::move(timestamps)), prices_(std::move(prices)) {
  check_shape(symbols_.size(), timestamps_.size(), prices_, "price panel");
  check_increasing(timestamps_);
  for (Eigen::Index i = 0; i < prices_.rows(); ++i) {
    for (Eigen::Index t = 0; t < prices_.cols(); ++t) {
      const double p = prices_(i, t);
      if (!std::isfinite(p) || p <= 0.0) {
        std::ostringstream os;
        os << "price must be finite and > 0 at row " << i << " (" << symbols_[i] << "), column "
           << t << " (" << timestamps_[t] << "): got " << p;
        throw InputError(os.str());
      }
    }
  }
}

ReturnPanel::ReturnPanel(std::vector<std::string> symbols, std::vector<std::string> timestamps,
                         Eigen::MatrixXd returns)
    : symbols_(std::move(symbols)),
      timestamps_(std::move(timestamps)),
      returns_(std::move(returns)) {
  check_shape(symbols_.size(), timestamps_.size(), returns_, "return panel");
  check_increasing(timestamps_);
  if (!returns_.allFinite()) {
    for (Eigen::Index i = 0; i < returns_.rows(); ++i) {
      for (Eigen::Index t = 0; t < returns_.cols(); ++t) {
        if (!std::isfinite(returns_(i, t))) {
          std::ostringstream os;
          os << "non-finite return at row " << i << ", column " << t;
          throw InputError(os.str());
        }
      }
    }
  }
}

ReturnPanel ReturnPanel::slice(int first, int last) const {
  if (first < 0 || last >= num_times() || first > last) {
    std::ostringstream os;
    os << "slice [" << first << ", " << last << "] outside panel of " << num_times()
       << " time points";
    throw RangeError(os.str());
  }
  std::vector<std::string> ts(timestamps_.begin() + first, timestamps_.begin() + last + 1);
  return ReturnPanel(symbols_, std::move(ts), returns_.middleCols(first, last - first + 1));
}

int ReturnPanel::find_symbol(const std::string& symbol) const {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i] == symbol) return static_cast<int>(i);
  }
  return -1;
}

void WindowSpec::validate() const {
  if (window_length < 1) throw ConfigError("window length w must be >= 1");
  if (execution_lag < 1) throw ConfigError("execution lag l must be >= 1");
}

ReturnPanel compute_log_returns(const PricePanel& prices) {
  if (prices.num_times() < 2) {
    throw InputError("need at least two price observations to compute returns");
  }
  const int n = prices.num_times() - 1;
  Eigen::MatrixXd r(prices.num_stocks(), n);
  for (int i = 0; i < prices.num_stocks(); ++i) {
    for (int t = 1; t <= n; ++t) {
      r(i, t - 1) = std::log(prices.price(i, t) / prices.price(i, t - 1));
    }
  }
  std::vector<std::string> ts(prices.timestamps().begin() + 1, prices.timestamps().end());
  return ReturnPanel(prices.symbols(), std::move(ts), std::move(r));
}

ReturnPanel slice_window(const ReturnPanel& panel, int t, const WindowSpec& spec) {
  spec.validate();
  const int first = t - spec.execution_lag - spec.window_length;
  const int last = t - spec.execution_lag;
  if (first < 0) {
    std::ostringstream os;
    os << "window for t=" << t << " starts at " << first
       << "; earliest admissible t is " << spec.execution_lag + spec.window_length;
    throw RangeError(os.str());
  }
  if (last >= panel.num_times()) {
    std::ostringstream os;
    os << "window for t=" << t << " ends at " << last << " beyond the last index "
       << panel.num_times() - 1;
    throw RangeError(os.str());
  }
  return panel.slice(first, last);
}

}  // namespace utc
