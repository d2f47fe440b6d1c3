#include "utc/gaussian_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "utc/error.hpp"

namespace utc {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln(2 pi)

// Eigen-factorised covariance used by both the E-step and sampling.
struct Factor {
  Eigen::MatrixXd basis;      // U
  Eigen::VectorXd eigvals;    // Lambda, floored
  double log_det = 0.0;
};

Factor factor(const Eigen::MatrixXd& cov, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Factor f;
  f.basis = es.eigenvectors();
  f.eigvals = es.eigenvalues().cwiseMax(floor);
  f.log_det = f.eigvals.array().log().sum();
  return f;
}

// Constrained M-step for one covariance: clip the eigenvalues of the scatter
// matrix at `floor`. Returns the clipped matrix and its factorisation.
Eigen::MatrixXd clip(const Eigen::MatrixXd& scatter, double floor, Factor* out) {
  Factor f = factor(scatter, floor);
  Eigen::MatrixXd c = f.basis * f.eigvals.asDiagonal() * f.basis.transpose();
  c = 0.5 * (c + c.transpose());
  if (out) *out = std::move(f);
  return c;
}

// log N(x_n | mu, Sigma) for every row of x.
Eigen::VectorXd log_density(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                            const Factor& f) {
  const Eigen::MatrixXd y = (x.rowwise() - mean.transpose()) * f.basis;
  const Eigen::VectorXd maha = y.array().square().matrix() * f.eigvals.cwiseInverse();
  const double c = -0.5 * (static_cast<double>(mean.size()) * kLog2Pi + f.log_det);
  return (c - 0.5 * maha.array()).matrix();
}

// Row-wise log-sum-exp; returns the totals and writes normalised
// responsibilities into `resp`.
double e_step(const Eigen::MatrixXd& logp, Eigen::MatrixXd& resp) {
  const Eigen::Index n = logp.rows();
  resp.resize(n, logp.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = logp.row(i).maxCoeff();
    if (!std::isfinite(m)) {
      resp.row(i).setConstant(1.0 / static_cast<double>(logp.cols()));
      total += m;
      continue;
    }
    const Eigen::ArrayXd e = (logp.row(i).array() - m).exp();
    const double s = e.sum();
    resp.row(i) = (e / s).matrix().transpose();
    total += m + std::log(s);
  }
  return total;
}

struct State {
  GaussianMixture gm;
  std::vector<Factor> factors;
};

Eigen::MatrixXd log_joint(const Eigen::MatrixXd& x, const State& s) {
  Eigen::MatrixXd logp(x.rows(), s.gm.components());
  for (int k = 0; k < s.gm.components(); ++k) {
    const double lw = s.gm.weights[k] > 0.0 ? std::log(s.gm.weights[k])
                                            : -std::numeric_limits<double>::infinity();
    logp.col(k) = (log_density(x, s.gm.means[static_cast<std::size_t>(k)],
                               s.factors[static_cast<std::size_t>(k)])
                       .array() +
                   lw)
                      .matrix();
  }
  return logp;
}

Eigen::MatrixXd data_covariance(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
  return (c.transpose() * c) / static_cast<double>(x.rows());
}

// Returns the number of re-seeded components.
int m_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& resp, const EmConfig& cfg,
           Engine& rng, State& s) {
  const Eigen::Index n = x.rows();
  const int k_count = static_cast<int>(resp.cols());
  s.gm.weights.resize(k_count);
  s.gm.means.assign(static_cast<std::size_t>(k_count), Eigen::VectorXd());
  s.gm.covariances.assign(static_cast<std::size_t>(k_count), Eigen::MatrixXd());
  s.factors.assign(static_cast<std::size_t>(k_count), Factor{});
  int reseeds = 0;
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  for (int k = 0; k < k_count; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const double nk = resp.col(k).sum();
    if (nk < cfg.empty_mass) {
      ++reseeds;
      s.gm.means[uk] = x.row(pick(rng)).transpose();
      s.gm.covariances[uk] = clip(data_covariance(x), cfg.cov_floor, &s.factors[uk]);
      s.gm.weights[k] = 1.0 / static_cast<double>(n);
      continue;
    }
    const Eigen::VectorXd mu = (x.transpose() * resp.col(k)) / nk;
    const Eigen::MatrixXd centred = x.rowwise() - mu.transpose();
    const Eigen::MatrixXd weighted = centred.array().colwise() * resp.col(k).array().sqrt();
    const Eigen::MatrixXd scatter = (weighted.transpose() * weighted) / nk;
    s.gm.means[uk] = mu;
    s.gm.covariances[uk] = clip(scatter, cfg.cov_floor, &s.factors[uk]);
    s.gm.weights[k] = nk / static_cast<double>(n);
  }
  s.gm.weights /= s.gm.weights.sum();
  return reseeds;
}

// k-means++ seeding followed by hard assignment to the nearest centre.
Eigen::MatrixXd kmeanspp_responsibilities(const Eigen::MatrixXd& x, int k_count, Engine& rng) {
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> centres;
  std::uniform_int_distribution<Eigen::Index> uniform(0, n - 1);
  centres.push_back(uniform(rng));
  Eigen::VectorXd d2 = (x.rowwise() - x.row(centres[0])).rowwise().squaredNorm();
  while (static_cast<int>(centres.size()) < k_count) {
    Eigen::Index next;
    if (d2.sum() > 0.0) {
      std::discrete_distribution<Eigen::Index> pick(d2.data(), d2.data() + d2.size());
      next = pick(rng);
    } else {
      next = uniform(rng);
    }
    centres.push_back(next);
    d2 = d2.cwiseMin((x.rowwise() - x.row(next)).rowwise().squaredNorm());
  }
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, k_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < k_count; ++k) {
      const double d = (x.row(i) - x.row(centres[static_cast<std::size_t>(k)])).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    resp(i, best) = 1.0;
  }
  return resp;
}

}  // namespace

void GaussianMixture::validate() const {
  const int k = components();
  if (k < 1) throw InputError("mixture has no components");
  if (static_cast<int>(means.size()) != k || static_cast<int>(covariances.size()) != k) {
    throw InputError("mixture component arrays disagree in length");
  }
  const int d = dim();
  for (int i = 0; i < k; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (means[ui].size() != d || covariances[ui].rows() != d || covariances[ui].cols() != d) {
      throw InputError("mixture component dimensions disagree");
    }
    if (weights[i] < 0.0) throw InputError("negative mixture weight");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw InputError("mixture weights must sum to 1");
}

EmFit fit_em(const Eigen::MatrixXd& samples, int components, const EmConfig& config,
             Engine& rng) {
  if (components < 1) throw ConfigError("mixture needs at least one component");
  if (samples.cols() < 1) throw InputError("samples must have dimension >= 1");
  if (samples.rows() < components) {
    std::ostringstream os;
    os << "fit_em: " << samples.rows() << " samples cannot support " << components
       << " components; fall back to another generator";
    throw InputError(os.str());
  }
  if (config.restarts < 1 || config.max_iter < 1) {
    throw ConfigError("EM needs restarts >= 1 and max_iter >= 1");
  }

  EmFit best;
  best.log_likelihood = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  double worst = -std::numeric_limits<double>::infinity();
  int total_reseeds = 0;

  for (int restart = 0; restart < config.restarts; ++restart) {
    State s;
    Eigen::MatrixXd resp = kmeanspp_responsibilities(samples, components, rng);
    bool reseeded = m_step(samples, resp, config, rng, s) > 0;
    total_reseeds += reseeded ? 1 : 0;

    std::vector<double> trace;
    double prev = -std::numeric_limits<double>::infinity();
    int it = 0;
    for (;; ++it) {
      const double ll = e_step(log_joint(samples, s), resp);
      trace.push_back(ll);
      const bool comparable = it > 0 && !reseeded;
      if (comparable) worst = std::max(worst, prev - ll);
      if ((comparable && ll - prev < config.tol) || it + 1 >= config.max_iter) break;
      prev = ll;
      const int r = m_step(samples, resp, config, rng, s);
      total_reseeds += r;
      reseeded = r > 0;
    }

    const double final_ll = trace.back();
    if (!have_best || final_ll > best.log_likelihood) {
      have_best = true;
      best.mixture = s.gm;
      best.log_likelihood = final_ll;
      best.iterations = it + 1;
      best.trace = std::move(trace);
    }
  }
  best.worst_decrease = worst;
  best.reseeds = total_reseeds;
  return best;
}

GaussianMixture fit_gaussian_mixture(const Eigen::MatrixXd& samples, int components,
                                     const EmConfig& config, Engine& rng) {
  return fit_em(samples, components, config, rng).mixture;
}

Eigen::MatrixXd sample(const GaussianMixture& gm, int n, Engine& rng) {
  gm.validate();
  const int d = gm.dim();
  std::vector<Eigen::MatrixXd> roots;
  roots.reserve(gm.covariances.size());
  for (const auto& cov : gm.covariances) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    roots.push_back(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
  }
  std::discrete_distribution<int> pick(gm.weights.data(), gm.weights.data() + gm.weights.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(n, d);
  Eigen::VectorXd e(d);
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(pick(rng));
    for (int j = 0; j < d; ++j) e[j] = normal(rng);
    out.row(i) = (gm.means[k] + roots[k] * e).transpose();
  }
  return out;
}

double log_likelihood(const GaussianMixture& gm, const Eigen::MatrixXd& samples) {
  gm.validate();
  if (samples.cols() != gm.dim()) throw InputError("sample dimension does not match mixture");
  State s;
  s.gm = gm;
  for (const auto& cov : gm.covariances) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw InputError("log_likelihood: component covariance is not positive definite");
    }
    s.factors.push_back(factor(cov, 0.0));
  }
  Eigen::MatrixXd resp;
  return e_step(log_joint(samples, s), resp);
}

}  // namespace utc
