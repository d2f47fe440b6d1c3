#include "utc/company.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "utc/error.hpp"
#include "utc/parallel.hpp"

namespace utc {

namespace {

constexpr int kSlotWidth = 7;  // p, q, d, f, op, act, w

SeedTree company_seeds(const TrainConfig& config, int target_stock) {
  return SeedTree(config.seed).child("company", static_cast<std::uint64_t>(target_stock));
}

int decode_int(double x, int lo, int hi) {
  if (std::isnan(x)) return lo;
  const double r = std::round(std::clamp(x, static_cast<double>(lo), static_cast<double>(hi)));
  return static_cast<int>(r);
}

RoundStats summarize(const std::vector<double>& r) {
  RoundStats s;
  if (r.empty()) return s;
  s.mean_r = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
  s.min_r = *lo;
  s.max_r = *hi;
  return s;
}

}  // namespace

std::string_view to_string(Mode mode) { return mode == Mode::TC ? "tc" : "utc"; }

Mode parse_mode(std::string_view tag) {
  if (tag == "tc" || tag == "TC") return Mode::TC;
  if (tag == "utc" || tag == "UTC") return Mode::UTC;
  throw ConfigError("unknown company mode '" + std::string(tag) + "' (expected tc or utc)");
}

void TrainConfig::validate() const {
  if (num_traders < 1) throw ConfigError("number of traders N must be >= 1");
  if (!(prune_ratio > 0.0 && prune_ratio < 1.0)) {
    std::ostringstream os;
    os << "prune ratio Q must lie in (0, 1), got " << prune_ratio;
    throw ConfigError(os.str());
  }
  if (fit_rounds < 1) throw ConfigError("fit rounds F must be >= 1");
  if (rounds < 0) throw ConfigError("training rounds must be >= 0");
  if (!(noise_var > 0.0)) throw ConfigError("noise variance must be > 0");
  if (!(prior_var > 0.0)) throw ConfigError("prior variance must be > 0");
  if (gm_components < 1) throw ConfigError("mixture components K must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

void Company::validate() const {
  hyper.validate();
  config.validate();
  if (traders.empty()) throw ConfigError("a company needs at least one trader");
  if (target_stock < 0 || target_stock >= hyper.num_stocks) {
    throw ConfigError("company target stock outside the universe");
  }
  for (const auto& t : traders) {
    const int m = t.params.num_terms();
    if (t.params.target_stock != target_stock) {
      throw ConfigError("trader targets a different stock than its company");
    }
    if (m < 1 || m > hyper.max_terms) throw ConfigError("trader term count outside [1, M_max]");
    if (t.weights.mean.size() != m || t.weights.cov.rows() != m || t.weights.cov.cols() != m) {
      throw ConfigError("trader weight posterior does not match its term count");
    }
    for (const auto& term : t.params.terms) {
      if (term.p < 0 || term.q < 0 || term.p >= hyper.num_stocks || term.q >= hyper.num_stocks ||
          term.d < 0 || term.f < 0 || term.d > hyper.max_delay || term.f > hyper.max_delay) {
        throw ConfigError("trader term outside the hyper-parameter domains");
      }
    }
  }
}

Company make_company(Mode mode, const TraderHyperParams& hyper, const TrainConfig& config,
                     int target_stock) {
  hyper.validate();
  config.validate();
  Company c;
  c.mode = mode;
  c.hyper = hyper;
  c.config = config;
  c.target_stock = target_stock;
  Engine rng = company_seeds(config, target_stock).stream("trader-init");
  c.traders.reserve(static_cast<std::size_t>(config.num_traders));
  for (int n = 0; n < config.num_traders; ++n) {
    c.traders.push_back(sample_random_trader(hyper, target_stock, c.initial_variance(), rng));
  }
  return c;
}

PredictionWithUncertainty aggregate_predict(const Company& company, const ReturnPanel& panel,
                                            int t) {
  const int n = company.size();
  if (n == 0) throw ConfigError("cannot aggregate an empty company");
  std::vector<TraderPrediction> preds(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    try {
      preds[static_cast<std::size_t>(i)] =
          predict_with_uncertainty(company.traders[static_cast<std::size_t>(i)], panel, t);
    } catch (const RangeError& e) {
      throw RangeError("trader " + std::to_string(i) + ": " + e.what());
    }
  }
  PredictionWithUncertainty out;
  for (const auto& p : preds) out.mean += p.mean;
  out.mean /= n;
  for (const auto& p : preds) {
    const double d = p.mean - out.mean;
    out.intra_var += d * d;
    out.inter_var += p.sigma * p.sigma;
  }
  out.intra_var /= n;
  out.inter_var = company.mode == Mode::TC ? 0.0 : out.inter_var / n;
  out.sigma = std::sqrt(out.intra_var + out.inter_var);
  return out;
}

Design build_design(const TraderParams& params, const ReturnPanel& panel, TrainingRange range) {
  if (range.last < range.first) throw InputError("no training rows in the educate range");
  if (range.last + 1 >= panel.num_times()) {
    throw RangeError("training range needs r[u + 1] inside the panel");
  }
  check_signal_range(params, panel, range.first);
  Design d;
  d.z.resize(range.size(), params.num_terms());
  d.y.resize(range.size());
  Eigen::VectorXd row(params.num_terms());
  for (int u = range.first; u <= range.last; ++u) {
    compute_signal_unchecked(params, panel, u, row.data());
    d.z.row(u - range.first) = row.transpose();
    d.y[u - range.first] = panel(params.target_stock, u + 1);
  }
  return d;
}

Eigen::VectorXd ridge_solution(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double lambda) {
  if (z.rows() == 0) throw InputError("ridge_solution: no training rows");
  if (z.rows() != y.size()) throw InputError("ridge_solution: Z and Y disagree in rows");
  if (lambda < 0.0) throw ConfigError("ridge penalty must be >= 0");
  const Eigen::Index m = z.cols();
  Eigen::MatrixXd gram = z.transpose() * z;
  gram.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) {
    std::ostringstream os;
    os << "Z'Z + lambda I (" << m << "x" << m << ", lambda=" << lambda
       << ") is singular; use lambda > 0";
    throw SingularError(os.str());
  }
  return llt.solve(z.transpose() * y);
}

WeightPosterior bayes_posterior(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                double noise_var, double prior_var) {
  if (!(noise_var > 0.0) || !(prior_var > 0.0)) {
    throw ConfigError("noise and prior variances must be > 0");
  }
  if (z.rows() == 0) throw InputError("bayes_posterior: no training rows");
  if (z.rows() != y.size()) throw InputError("bayes_posterior: Z and Y disagree in rows");
  const Eigen::Index m = z.cols();
  Eigen::MatrixXd precision = z.transpose() * z / noise_var;
  precision.diagonal().array() += 1.0 / prior_var;
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw SingularError("posterior precision is not positive definite");
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(m, m));
  cov = 0.5 * (cov + cov.transpose());
  WeightPosterior post;
  // Equal to Sigma Z'Y / noise_var; shares the TC solve bit for bit.
  post.mean = ridge_solution(z, y, noise_var / prior_var);
  post.cov = std::move(cov);
  return post;
}

Trader educate_tc(const Trader& trader, const ReturnPanel& panel, TrainingRange range,
                  double lambda) {
  const Design d = build_design(trader.params, panel, range);
  Trader out = trader;
  out.weights = WeightPosterior::point(ridge_solution(d.z, d.y, lambda));
  return out;
}

Trader educate_utc(const Trader& trader, const ReturnPanel& panel, TrainingRange range,
                   double noise_var, double prior_var) {
  if (!(noise_var > 0.0) || !(prior_var > 0.0)) {
    throw ConfigError("noise and prior variances must be > 0");
  }
  const Design d = build_design(trader.params, panel, range);
  Trader out = trader;
  out.weights = bayes_posterior(d.z, d.y, noise_var, prior_var);
  return out;
}

std::vector<double> evaluate_traders(const Company& company, const ReturnPanel& panel,
                                     TrainingRange range) {
  std::vector<double> r(company.traders.size());
  parallel_for(company.size(), company.config.threads, [&](int i) {
    const auto ui = static_cast<std::size_t>(i);
    r[ui] = cumulative_return(company.traders[ui], panel, range.first, range.last);
  });
  return r;
}

double lower_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  // The small offset keeps e.g. 0.1 * 200 from rounding up to 21.
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

std::vector<int> select_bottom(const std::vector<double>& returns, double q) {
  const double threshold = lower_quantile(returns, q);
  std::vector<int> out;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    if (returns[i] <= threshold) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> select_prune(const std::vector<double>& returns, double q) {
  const int n = static_cast<int>(returns.size());
  if (n <= 1) return {};
  int k = static_cast<int>(std::ceil(q * n - 1e-9));
  k = std::clamp(k, 1, n - 1);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return returns[static_cast<std::size_t>(a)] < returns[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

EducateResult educate_step(const Company& company, const ReturnPanel& panel,
                           TrainingRange range) {
  const std::vector<double> r = evaluate_traders(company, panel, range);
  EducateResult out{company, select_bottom(r, company.config.prune_ratio)};
  const double lambda = company.config.ridge_lambda();
  parallel_for(static_cast<int>(out.educated.size()), company.config.threads, [&](int k) {
    const auto n = static_cast<std::size_t>(out.educated[static_cast<std::size_t>(k)]);
    out.company.traders[n] =
        company.mode == Mode::TC
            ? educate_tc(company.traders[n], panel, range, lambda)
            : educate_utc(company.traders[n], panel, range, company.config.noise_var,
                          company.config.prior_var);
  });
  return out;
}

int encoding_size(const TraderHyperParams& hyper) { return 1 + kSlotWidth * hyper.max_terms; }

Eigen::VectorXd encode_params(const Trader& trader, const TraderHyperParams& hyper) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(encoding_size(hyper));
  const int m = trader.params.num_terms();
  if (m > hyper.max_terms) throw ConfigError("trader has more terms than max_terms");
  v[0] = m;
  for (int j = 0; j < m; ++j) {
    const TermParams& t = trader.params.terms[static_cast<std::size_t>(j)];
    const int o = 1 + kSlotWidth * j;
    v[o + 0] = t.p;
    v[o + 1] = t.q;
    v[o + 2] = t.d;
    v[o + 3] = t.f;
    v[o + 4] = static_cast<int>(t.op);
    v[o + 5] = static_cast<int>(t.act);
    v[o + 6] = trader.weights.mean[j];
  }
  return v;
}

Trader decode_params(const Eigen::VectorXd& encoded, const TraderHyperParams& hyper,
                     int target_stock, double initial_variance) {
  if (encoded.size() != encoding_size(hyper)) {
    throw InputError("encoded trader has the wrong length for these hyper-parameters");
  }
  Trader t;
  t.params.target_stock = target_stock;
  const int m = decode_int(encoded[0], 1, hyper.max_terms);
  t.params.terms.resize(static_cast<std::size_t>(m));
  Eigen::VectorXd w(m);
  for (int j = 0; j < m; ++j) {
    const int o = 1 + kSlotWidth * j;
    TermParams& term = t.params.terms[static_cast<std::size_t>(j)];
    term.p = decode_int(encoded[o + 0], 0, hyper.num_stocks - 1);
    term.q = decode_int(encoded[o + 1], 0, hyper.num_stocks - 1);
    term.d = decode_int(encoded[o + 2], 0, hyper.max_delay);
    term.f = decode_int(encoded[o + 3], 0, hyper.max_delay);
    term.op = static_cast<Operator>(decode_int(encoded[o + 4], 0, kNumOperators - 1));
    term.act = static_cast<Activation>(decode_int(encoded[o + 5], 0, kNumActivations - 1));
    w[j] = std::isfinite(encoded[o + 6]) ? encoded[o + 6] : 0.0;
  }
  t.weights = WeightPosterior::isotropic(std::move(w), initial_variance);
  return t;
}

PruneResult prune_and_generate(const Company& company, const ReturnPanel& panel,
                               TrainingRange range) {
  PruneResult out{company, 0, 0};
  Company& c = out.company;
  const SeedTree seeds = company_seeds(c.config, c.target_stock);
  for (int rep = 0; rep < c.config.fit_rounds; ++rep) {
    const std::vector<double> r = evaluate_traders(c, panel, range);
    const std::vector<int> pruned = select_prune(r, c.config.prune_ratio);
    const std::uint64_t gen = c.generation++;
    if (pruned.empty()) continue;
    out.pruned += static_cast<int>(pruned.size());

    std::vector<char> is_pruned(c.traders.size(), 0);
    for (int i : pruned) is_pruned[static_cast<std::size_t>(i)] = 1;
    const int n_survivors = c.size() - static_cast<int>(pruned.size());
    Eigen::MatrixXd encoded(n_survivors, encoding_size(c.hyper));
    for (int i = 0, row = 0; i < c.size(); ++i) {
      if (!is_pruned[static_cast<std::size_t>(i)]) {
        encoded.row(row++) = encode_params(c.traders[static_cast<std::size_t>(i)], c.hyper).transpose();
      }
    }

    const int needed = static_cast<int>(pruned.size());
    std::vector<Trader> fresh;
    fresh.reserve(static_cast<std::size_t>(needed));
    if (n_survivors >= c.config.gm_components) {
      Engine rng = seeds.stream("gm", gen);
      try {
        const GaussianMixture gm = fit_gaussian_mixture(encoded, c.config.gm_components, c.config.em, rng);
        const Eigen::MatrixXd draws = sample(gm, needed, rng);
        for (int k = 0; k < needed; ++k) {
          fresh.push_back(decode_params(draws.row(k).transpose(), c.hyper, c.target_stock,
                                        c.initial_variance()));
        }
      } catch (const std::exception& e) {
        spdlog::warn("mixture fit failed ({}); sampling random replacements", e.what());
        fresh.clear();
      }
    } else {
      spdlog::warn("{} survivors cannot support a {}-component mixture; sampling random replacements",
                   n_survivors, c.config.gm_components);
    }
    if (fresh.empty()) {
      ++out.fallbacks;
      Engine rng = seeds.stream("regenerate", gen);
      for (int k = 0; k < needed; ++k) {
        fresh.push_back(sample_random_trader(c.hyper, c.target_stock, c.initial_variance(), rng));
      }
    }
    for (int k = 0; k < needed; ++k) {
      c.traders[static_cast<std::size_t>(pruned[static_cast<std::size_t>(k)])] =
          std::move(fresh[static_cast<std::size_t>(k)]);
    }
  }
  return out;
}

TrainResult train(const Company& company, const ReturnPanel& panel, TrainingRange range,
                  int rounds) {
  company.validate();
  if (rounds < 0) rounds = company.config.rounds;
  TrainResult out{company, {}, {}};
  out.initial = summarize(evaluate_traders(out.company, panel, range));
  for (int k = 1; k <= rounds; ++k) {
    EducateResult ed = educate_step(out.company, panel, range);
    PruneResult pr = prune_and_generate(ed.company, panel, range);
    out.company = std::move(pr.company);
    // Simple averaging has no trainable aggregation parameters to update here.
    RoundStats s = summarize(evaluate_traders(out.company, panel, range));
    s.round = k;
    s.n_educated = static_cast<int>(ed.educated.size());
    s.n_pruned = pr.pruned;
    out.rounds.push_back(s);
  }
  return out;
}

TrainingRange full_training_range(const TraderHyperParams& hyper, const ReturnPanel& panel) {
  TrainingRange r{hyper.max_history(), panel.num_times() - 2};
  if (r.last < r.first) {
    std::ostringstream os;
    os << "panel of " << panel.num_times() << " periods is too short; traders need "
       << hyper.max_history() + 2 << " or more";
    throw RangeError(os.str());
  }
  return r;
}

const Company* CompanyBundle::find(int stock) const {
  for (const auto& c : companies) {
    if (c.target_stock == stock) return &c;
  }
  return nullptr;
}

BundleTrainResult train_bundle(Mode mode, const TraderHyperParams& hyper,
                               const TrainConfig& config, const ReturnPanel& panel,
                               const std::vector<int>& targets, TrainingRange range) {
  if (hyper.num_stocks != panel.num_stocks()) {
    throw ConfigError("hyper-parameter universe size does not match the panel");
  }
  BundleTrainResult out;
  out.bundle.symbols = panel.symbols();
  out.bundle.companies.resize(targets.size());
  out.rounds.resize(targets.size());
  TrainConfig inner = config;
  if (targets.size() > 1) inner.threads = 1;
  parallel_for(static_cast<int>(targets.size()), config.threads, [&](int k) {
    const auto uk = static_cast<std::size_t>(k);
    TrainResult r = train(make_company(mode, hyper, inner, targets[uk]), panel, range);
    r.company.config.threads = config.threads;
    out.bundle.companies[uk] = std::move(r.company);
    out.rounds[uk].reserve(r.rounds.size() + 1);
    out.rounds[uk].push_back(r.initial);
    out.rounds[uk].insert(out.rounds[uk].end(), r.rounds.begin(), r.rounds.end());
  });
  return out;
}

}  // namespace utc
