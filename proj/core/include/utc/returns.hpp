#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace utc {

/// Prices of S stocks over T+1 strictly increasing timestamps.
///
/// Rows are stocks, columns are time points. Every price must be strictly
/// positive and finite. Instances are immutable once constructed.
class PricePanel {
 public:
  PricePanel(std::vector<std::string> symbols, std::vector<std::string> timestamps,
             Eigen::MatrixXd prices);

  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::vector<std::string>& timestamps() const { return timestamps_; }
  const Eigen::MatrixXd& prices() const { return prices_; }

  int num_stocks() const { return static_cast<int>(prices_.rows()); }
  int num_times() const { return static_cast<int>(prices_.cols()); }
  double price(int stock, int t) const { return prices_(stock, t); }

 private:
  std::vector<std::string> symbols_;
  std::vector<std::string> timestamps_;
  Eigen::MatrixXd prices_;
};

/// Logarithmic returns, S stocks by T periods. Entries are finite.
class ReturnPanel {
 public:
  ReturnPanel(std::vector<std::string> symbols, std::vector<std::string> timestamps,
              Eigen::MatrixXd returns);

  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::vector<std::string>& timestamps() const { return timestamps_; }
  const Eigen::MatrixXd& returns() const { return returns_; }

  int num_stocks() const { return static_cast<int>(returns_.rows()); }
  int num_times() const { return static_cast<int>(returns_.cols()); }

  /// r_i[t]; unchecked.
  double operator()(int stock, int t) const { return returns_(stock, t); }

  /// Sub-panel over the inclusive time range [first, last].
  ReturnPanel slice(int first, int last) const;

  /// Index of `symbol`, or -1.
  int find_symbol(const std::string& symbol) const;

 private:
  std::vector<std::string> symbols_;
  std::vector<std::string> timestamps_;
  Eigen::MatrixXd returns_;
};

/// Training window length w and trading execution lag l, both in periods.
struct WindowSpec {
  int window_length = 10;
  int execution_lag = 1;

  void validate() const;
};

/// returns[i][t] = ln(prices[i][t+1] / prices[i][t]); one fewer time point.
/// The output keeps the timestamps of the later price of each pair.
ReturnPanel compute_log_returns(const PricePanel& prices);

/// Sub-panel over [t - l - w, t - l], bounds inclusive (w + 1 points).
/// Throws RangeError naming the earliest admissible t when t - l - w < 0.
ReturnPanel slice_window(const ReturnPanel& panel, int t, const WindowSpec& spec);

}  // namespace utc
