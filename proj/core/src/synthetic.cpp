#include "utc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "utc/error.hpp"
#include "utc/rng.hpp"

namespace utc {

namespace {
// The product terms make rare noise excursions explode; stop well before overflow.
constexpr double kDivergenceBound = 1e6;
}  // namespace

void SyntheticSpec::validate() const {
  if (n_samples < 2) throw ConfigError("n_samples must be >= 2");
  if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be >= 0");
  if (burn_in < 0) throw ConfigError("burn_in must be >= 0");
}

std::string iso_date(int days) {
  // Civil-from-days over the proleptic Gregorian calendar.
  long z = 10957L + days + 719468L;  // 10957 days from 1970-01-01 to 2000-01-01
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const long doe = z - era * 146097;
  const long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  long y = yoe + era * 400;
  const long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const long mp = (5 * doy + 2) / 153;
  const long d = doy - (153 * mp + 2) / 5 + 1;
  const long m = mp < 10 ? mp + 3 : mp - 9;
  if (m <= 2) ++y;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%04ld-%02ld-%02ld", y, m, d);
  return buf;
}

std::vector<std::string> synthetic_timestamps(int n) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) out.push_back(iso_date(t));
  return out;
}

ReturnPanel gen_nonlinear(const SyntheticSpec& spec) {
  spec.validate();
  const SeedTree seeds(spec.seed);
  Engine e0 = seeds.stream("noise/eps0");
  Engine e1 = seeds.stream("noise/eps1");
  std::normal_distribution<double> n0(0.0, 1.0), n1(0.0, 1.0);

  Eigen::MatrixXd y(2, spec.n_samples);
  double a = 0.0, b = 0.0;  // y0(t-1), y1(t-1)
  const int total = spec.burn_in + spec.n_samples;
  for (int s = 0; s < total; ++s) {
    const double na = 0.5 * a - 0.5 * a * b + 0.1 * std::min(a, b) + spec.noise_sd * n0(e0);
    const double nb = -0.2 * b + 0.8 * a + 0.5 * std::max(a, b) + spec.noise_sd * n1(e1);
    a = na;
    b = nb;
    if (!(std::abs(a) < kDivergenceBound && std::abs(b) < kDivergenceBound)) {
      throw InputError("nonlinear system diverged at step " + std::to_string(s) + " (seed " +
                       std::to_string(spec.seed) + "); use a smaller noise_sd or another seed");
    }
    if (s >= spec.burn_in) {
      y(0, s - spec.burn_in) = a;
      y(1, s - spec.burn_in) = b;
    }
  }
  return ReturnPanel({"y0", "y1"}, synthetic_timestamps(spec.n_samples), std::move(y));
}

ReturnPanel gen_shift(const SyntheticSpec& spec, const ReturnPanel& base) {
  if (base.num_stocks() < 2) throw InputError("shift series needs y0 and y1 in the base panel");
  if (!(spec.noise_sd >= 0.0)) throw ConfigError("noise_sd must be >= 0");
  const int shift = spec.shift_time.value_or(200);
  if (shift < 0) throw ConfigError("shift_time must be >= 0");

  const int n = base.num_times();
  Engine e2 = SeedTree(spec.seed).stream("noise/eps2");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(base.num_stocks() + 1, n);
  out.topRows(base.num_stocks()) = base.returns();
  for (int t = 0; t < n; ++t) {
    const double y0 = t > 0 ? base(0, t - 1) : 0.0;
    const double y1 = t > 0 ? base(1, t - 1) : 0.0;
    const double mean = t < shift ? y0 + y1 : y0 - y1;
    out(base.num_stocks(), t) = mean + spec.noise_sd * normal(e2);
  }
  auto symbols = base.symbols();
  symbols.push_back("y2");
  return ReturnPanel(std::move(symbols), base.timestamps(), std::move(out));
}

ReturnPanel gen_regime_panel(const RegimePanelSpec& spec) {
  if (spec.num_stocks < 3) throw ConfigError("regime panel needs at least 3 stocks");
  if (spec.n_samples < 2) throw ConfigError("n_samples must be >= 2");
  if (spec.volatility.empty()) throw ConfigError("volatility cycle must not be empty");
  const int s_count = spec.num_stocks;
  const SeedTree seeds(spec.seed);

  Engine coef_rng = seeds.stream("regime/coefficients");
  std::uniform_real_distribution<double> own(-0.3, 0.3), cross(0.2, 0.4), kink(0.0, 0.2);
  Eigen::VectorXd a(s_count), b(s_count), c(s_count);
  for (int i = 0; i < s_count; ++i) {
    a[i] = own(coef_rng);
    b[i] = cross(coef_rng);
    c[i] = kink(coef_rng);
  }

  Engine noise_rng = seeds.stream("noise/regime");
  Engine market_rng = seeds.stream("noise/market");
  std::normal_distribution<double> normal(0.0, 1.0), market(0.0, 1.0);

  const int total = spec.burn_in + spec.n_samples;
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(s_count), next(s_count);
  Eigen::MatrixXd out(s_count, spec.n_samples);
  for (int step = 0; step < total; ++step) {
    const int t = step - spec.burn_in;
    const auto regime = static_cast<std::size_t>(
        std::count_if(spec.shift_times.begin(), spec.shift_times.end(),
                      [t](int shift) { return t >= shift; }));
    const double sign = regime % 2 == 0 ? 1.0 : -1.0;
    const double vol = spec.noise_sd * spec.volatility[regime % spec.volatility.size()];
    const double m = 0.5 * vol * market(market_rng);
    for (int i = 0; i < s_count; ++i) {
      const double own_lag = prev[i];
      const double next_lag = prev[(i + 1) % s_count];
      const double kink_lag = std::max(prev[i], prev[(i + 2) % s_count]);
      next[i] = a[i] * own_lag + sign * b[i] * next_lag + c[i] * kink_lag + m + vol * normal(noise_rng);
    }
    prev = next;
    if (t >= 0) out.col(t) = next;
  }

  std::vector<std::string> symbols;
  for (int i = 0; i < s_count; ++i) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "S%02d", i);
    symbols.emplace_back(buf);
  }
  return ReturnPanel(std::move(symbols), synthetic_timestamps(spec.n_samples), std::move(out));
}

}  // namespace utc
