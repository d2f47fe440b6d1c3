#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "utc/returns.hpp"

namespace utc {

struct SyntheticSpec {
  int n_samples = 2000;
  std::uint64_t seed = 0;
  double noise_sd = 0.1;   // standard deviation of every epsilon
  std::optional<int> shift_time;  // first index of the second regime (shift series)
  int burn_in = 50;        // discarded leading samples of the nonlinear system

  void validate() const;
};

/// Bivariate nonlinear system, started at zero, with `burn_in` samples dropped:
///   y0(t) = 0.5 y0 - 0.5 y0 y1 + 0.1 min(y0, y1) + e0(t)
///   y1(t) = -0.2 y1 + 0.8 y0 + 0.5 max(y0, y1) + e1(t)
/// where the right-hand sides use time t - 1. Series are named y0 and y1.
ReturnPanel gen_nonlinear(const SyntheticSpec& spec);

/// Appends y2(t) = y0(t-1) + y1(t-1) + e2(t) for t < shift_time and
/// y0(t-1) - y1(t-1) + e2(t) afterwards (lagged values before t = 0 are 0).
/// A shift time past the end leaves a single regime. Throws ConfigError when
/// the shift time is negative.
ReturnPanel gen_shift(const SyntheticSpec& spec, const ReturnPanel& base);

/// Multi-stock panel with abrupt regime changes, for end-to-end backtests.
struct RegimePanelSpec {
  int num_stocks = 20;
  int n_samples = 1500;
  std::uint64_t seed = 0;
  double noise_sd = 0.01;
  std::vector<int> shift_times = {500, 900, 1200};
  std::vector<double> volatility = {1.0, 2.5};  // noise multiplier, cycled per regime
  int burn_in = 50;
};

/// r_i(t) = a_i r_i(t-1) + s_k b_i r_{i+1}(t-1) + c_i max(r_i(t-1), r_{i+2}(t-1))
///          + market(t) + e_i(t)
/// with regime k flipping s_k between +1 and -1 and scaling both noise
/// terms by volatility[k % size].
ReturnPanel gen_regime_panel(const RegimePanelSpec& spec);

/// ISO-8601 calendar date `days` after 2000-01-01.
std::string iso_date(int days);

/// Labels 2000-01-01, 2000-01-02, ... for n periods.
std::vector<std::string> synthetic_timestamps(int n);

}  // namespace utc
