#include "utc/trader.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "utc/error.hpp"

namespace utc {

namespace {

constexpr std::array<std::string_view, kNumActivations> kActivationTags = {
    "identity", "tanh", "exp", "sign", "relu"};
constexpr std::array<std::string_view, kNumOperators> kOperatorTags = {
    "add", "sub", "mul", "left", "right", "max", "min", "greater", "less", "corr"};

int term_history(const TermParams& term) {
  const int lag = std::max(term.d, term.f);
  return term.op == Operator::Corr ? lag + kCorrelationWindow - 1 : lag;
}

}  // namespace

std::string_view to_string(Activation a) { return kActivationTags[static_cast<int>(a)]; }
std::string_view to_string(Operator op) { return kOperatorTags[static_cast<int>(op)]; }

std::optional<Activation> parse_activation(std::string_view tag) {
  for (int i = 0; i < kNumActivations; ++i) {
    if (kActivationTags[i] == tag) return static_cast<Activation>(i);
  }
  return std::nullopt;
}

std::optional<Operator> parse_operator(std::string_view tag) {
  for (int i = 0; i < kNumOperators; ++i) {
    if (kOperatorTags[i] == tag) return static_cast<Operator>(i);
  }
  return std::nullopt;
}

double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::Identity:
      return x;
    case Activation::Tanh:
      return std::tanh(x);
    case Activation::Exp:
      return std::exp(std::clamp(x, -kExpClamp, kExpClamp));
    case Activation::Sign:
      return signum(x);
    case Activation::ReLU:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

double apply_operator(Operator op, double x, double y) {
  switch (op) {
    case Operator::Add:
      return x + y;
    case Operator::Sub:
      return x - y;
    case Operator::Mul:
      return x * y;
    case Operator::Left:
      return x;
    case Operator::Right:
      return y;
    case Operator::Max:
      return std::max(x, y);
    case Operator::Min:
      return std::min(x, y);
    case Operator::Greater:
      return signum(x - y);
    case Operator::Less:
      return signum(y - x);
    case Operator::Corr:
      break;
  }
  throw std::logic_error("Corr is a window operator and has no scalar form");
}

double pearson(const double* x, const double* y, int n) {
  double mx = 0.0, my = 0.0;
  for (int k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int k = 0; k < n; ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

int TraderParams::required_history() const {
  int h = 0;
  for (const auto& term : terms) h = std::max(h, term_history(term));
  return h;
}

WeightPosterior WeightPosterior::point(Eigen::VectorXd mean) {
  const auto m = mean.size();
  return {std::move(mean), Eigen::MatrixXd::Zero(m, m)};
}

WeightPosterior WeightPosterior::isotropic(Eigen::VectorXd mean, double variance) {
  const auto m = mean.size();
  return {std::move(mean), variance * Eigen::MatrixXd::Identity(m, m)};
}

void TraderHyperParams::validate() const {
  if (max_terms < 1) throw ConfigError("max_terms must be >= 1");
  if (max_delay < 0) throw ConfigError("max_delay must be >= 0");
  if (num_stocks < 1) throw ConfigError("num_stocks must be >= 1");
  if (!(weight_bound > 0.0)) throw ConfigError("weight_bound must be > 0");
}

void check_signal_range(const TraderParams& params, const ReturnPanel& panel, int t) {
  if (t >= panel.num_times()) {
    std::ostringstream os;
    os << "t=" << t << " is beyond the panel (" << panel.num_times() << " time points)";
    throw RangeError(os.str());
  }
  for (int j = 0; j < params.num_terms(); ++j) {
    const auto& term = params.terms[static_cast<std::size_t>(j)];
    if (term.p < 0 || term.q < 0 || term.p >= panel.num_stocks() ||
        term.q >= panel.num_stocks()) {
      std::ostringstream os;
      os << "term " << j << " references stock (" << term.p << ", " << term.q
         << ") outside a panel of " << panel.num_stocks() << " stocks";
      throw RangeError(os.str());
    }
    if (t - term_history(term) < 0) {
      std::ostringstream os;
      os << "term " << j << " (" << to_string(term.op) << ", d=" << term.d << ", f=" << term.f
         << ") needs t >= " << term_history(term) << ", got t=" << t;
      throw RangeError(os.str());
    }
  }
}

void compute_signal_unchecked(const TraderParams& params, const ReturnPanel& panel, int t,
                              double* out) {
  const Eigen::MatrixXd& r = panel.returns();
  for (std::size_t j = 0; j < params.terms.size(); ++j) {
    const TermParams& term = params.terms[j];
    double v;
    if (term.op == Operator::Corr) {
      // Rows of a column-major matrix are strided; copy the two windows out.
      std::array<double, kCorrelationWindow> x{}, y{};
      const int x0 = t - term.d - kCorrelationWindow + 1;
      const int y0 = t - term.f - kCorrelationWindow + 1;
      for (int k = 0; k < kCorrelationWindow; ++k) {
        x[static_cast<std::size_t>(k)] = r(term.p, x0 + k);
        y[static_cast<std::size_t>(k)] = r(term.q, y0 + k);
      }
      v = pearson(x.data(), y.data(), kCorrelationWindow);
    } else {
      v = apply_operator(term.op, r(term.p, t - term.d), r(term.q, t - term.f));
    }
    out[j] = apply_activation(term.act, v);
  }
}

Eigen::VectorXd compute_signal(const TraderParams& params, const ReturnPanel& panel, int t) {
  check_signal_range(params, panel, t);
  Eigen::VectorXd z(params.num_terms());
  compute_signal_unchecked(params, panel, t, z.data());
  return z;
}

double predict_point(const Trader& trader, const ReturnPanel& panel, int t) {
  return trader.weights.mean.dot(compute_signal(trader.params, panel, t));
}

TraderPrediction predict_with_uncertainty(const Trader& trader, const ReturnPanel& panel, int t) {
  const Eigen::VectorXd z = compute_signal(trader.params, panel, t);
  TraderPrediction out;
  out.mean = trader.weights.mean.dot(z);
  out.variance = z.dot(trader.weights.cov * z);
  out.sigma = std::sqrt(std::max(out.variance, 0.0));
  return out;
}

double cumulative_return(const Trader& trader, const ReturnPanel& panel, int first, int last) {
  if (last < first) throw RangeError("cumulative_return: empty range");
  if (last + 1 >= panel.num_times()) {
    throw RangeError("cumulative_return: u + 1 must stay inside the panel");
  }
  check_signal_range(trader.params, panel, first);
  const int target = trader.params.target_stock;
  Eigen::VectorXd z(trader.params.num_terms());
  double total = 0.0;
  for (int u = first; u <= last; ++u) {
    compute_signal_unchecked(trader.params, panel, u, z.data());
    total += signum(trader.weights.mean.dot(z)) * panel(target, u + 1);
  }
  return total;
}

Trader sample_random_trader(const TraderHyperParams& hyper, int target_stock,
                            double initial_variance, Engine& rng) {
  hyper.validate();
  if (target_stock < 0 || target_stock >= hyper.num_stocks) {
    throw ConfigError("target stock outside the universe");
  }
  std::uniform_int_distribution<int> num_terms(1, hyper.max_terms);
  std::uniform_int_distribution<int> stock(0, hyper.num_stocks - 1);
  std::uniform_int_distribution<int> delay(0, hyper.max_delay);
  std::uniform_int_distribution<int> op(0, kNumOperators - 1);
  std::uniform_int_distribution<int> act(0, kNumActivations - 1);
  std::uniform_real_distribution<double> weight(-hyper.weight_bound, hyper.weight_bound);

  Trader trader;
  trader.params.target_stock = target_stock;
  const int m = num_terms(rng);
  trader.params.terms.resize(static_cast<std::size_t>(m));
  for (auto& term : trader.params.terms) {
    term.p = stock(rng);
    term.q = stock(rng);
    term.d = delay(rng);
    term.f = delay(rng);
    term.op = static_cast<Operator>(op(rng));
    term.act = static_cast<Activation>(act(rng));
  }
  Eigen::VectorXd mean(m);
  for (int j = 0; j < m; ++j) mean[j] = weight(rng);
  trader.weights = WeightPosterior::isotropic(std::move(mean), initial_variance);
  return trader;
}

}  // namespace utc
