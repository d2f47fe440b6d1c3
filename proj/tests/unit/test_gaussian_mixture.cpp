#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "utc/error.hpp"
#include "utc/gaussian_mixture.hpp"

using namespace utc;
using Catch::Matchers::WithinAbs;

namespace {

Eigen::MatrixXd two_bumps(int n, std::uint64_t seed) {
  Engine rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = (coin(rng) ? 2.0 : -2.0) + normal(rng);
  return x;
}

GaussianMixture standard_normal(int d) {
  GaussianMixture gm;
  gm.weights = Eigen::VectorXd::Ones(1);
  gm.means = {Eigen::VectorXd::Zero(d)};
  gm.covariances = {Eigen::MatrixXd::Identity(d, d)};
  return gm;
}

}  // namespace

TEST_CASE("K = 1 is the closed-form Gaussian") {
  Engine rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd x(300, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  x.col(1) += 0.5 * x.col(0);
  const EmFit fit = fit_em(x, 1, EmConfig{}, rng);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / double(x.rows());
  CHECK(fit.mixture.weights[0] == 1.0);
  CHECK((fit.mixture.means[0] - mean.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((fit.mixture.covariances[0] - cov).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fit.worst_decrease <= 1e-9);
}

TEST_CASE("recovers a two-component 1-D mixture") {
  Engine rng(2);
  const EmFit fit = fit_em(two_bumps(2000, 3), 2, EmConfig{}, rng);
  const int lo = fit.mixture.means[0][0] < fit.mixture.means[1][0] ? 0 : 1;
  CHECK_THAT(fit.mixture.means[static_cast<std::size_t>(lo)][0], WithinAbs(-2.0, 0.15));
  CHECK_THAT(fit.mixture.means[static_cast<std::size_t>(1 - lo)][0], WithinAbs(2.0, 0.15));
  CHECK_THAT(fit.mixture.weights[lo], WithinAbs(0.5, 0.05));
  CHECK(fit.worst_decrease <= 1e-9);
  for (std::size_t i = 1; i < fit.trace.size(); ++i) CHECK(fit.trace[i] >= fit.trace[i - 1] - 1e-9);
}

TEST_CASE("identical samples collapse to the floor") {
  Engine rng(4);
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(20, 2, 0.7);
  EmConfig cfg;
  const GaussianMixture gm = fit_gaussian_mixture(x, 3, cfg, rng);
  REQUIRE_NOTHROW(gm.validate());
  for (int k = 0; k < gm.components(); ++k) {
    CHECK(gm.means[static_cast<std::size_t>(k)].isApprox(Eigen::Vector2d(0.7, 0.7)));
    CHECK(gm.covariances[static_cast<std::size_t>(k)].isApprox(cfg.cov_floor * Eigen::Matrix2d::Identity()));
  }
  const Eigen::MatrixXd draws = sample(gm, 100, rng);
  CHECK((draws.array() - 0.7).abs().maxCoeff() < 0.01);
}

TEST_CASE("fit_em input checks") {
  Engine rng(5);
  CHECK_THROWS_AS(fit_em(Eigen::MatrixXd::Zero(2, 1), 3, EmConfig{}, rng), InputError);
  CHECK_THROWS_AS(fit_em(Eigen::MatrixXd::Zero(5, 1), 0, EmConfig{}, rng), ConfigError);
}

TEST_CASE("sampling") {
  SECTION("zero covariance is a point mass") {
    GaussianMixture gm;
    gm.weights = Eigen::VectorXd::Ones(1);
    gm.means = {Eigen::Vector2d(1.5, -3.0)};
    gm.covariances = {Eigen::Matrix2d::Zero()};
    Engine rng(6);
    const Eigen::MatrixXd x = sample(gm, 50, rng);
    for (int i = 0; i < 50; ++i) CHECK(x.row(i) == gm.means[0].transpose());
  }
  SECTION("standard normal moments") {
    Engine rng(7);
    const Eigen::MatrixXd x = sample(standard_normal(1), 100000, rng);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().sum() / (x.rows() - 1);
    CHECK_THAT(mean, WithinAbs(0.0, 0.02));
    CHECK_THAT(var, WithinAbs(1.0, 0.03));
  }
  SECTION("zero-weight components are never drawn") {
    GaussianMixture gm;
    gm.weights = Eigen::Vector2d(1.0, 0.0);
    gm.means = {Eigen::VectorXd::Constant(1, -10.0), Eigen::VectorXd::Constant(1, 10.0)};
    gm.covariances = {Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1)};
    Engine rng(8);
    CHECK(sample(gm, 5000, rng).maxCoeff() < 0.0);
  }
  SECTION("deterministic given the engine") {
    Engine a(9), b(9);
    CHECK(sample(standard_normal(3), 10, a) == sample(standard_normal(3), 10, b));
  }
  SECTION("invalid mixtures") {
    GaussianMixture gm = standard_normal(1);
    gm.weights[0] = 0.5;
    Engine rng(1);
    CHECK_THROWS_AS(sample(gm, 1, rng), InputError);
  }
}

TEST_CASE("log likelihood") {
  const GaussianMixture gm = standard_normal(1);
  const double half_log_2pi = 0.5 * std::log(2.0 * M_PI);
  CHECK_THAT(log_likelihood(gm, Eigen::MatrixXd::Zero(1, 1)), WithinAbs(-half_log_2pi, 1e-14));

  Eigen::MatrixXd one(1, 1), two(2, 1);
  one << 0.3;
  two << 0.3, 0.3;
  CHECK_THAT(log_likelihood(gm, two), WithinAbs(2.0 * log_likelihood(gm, one), 1e-14));

  GaussianMixture mix;
  mix.weights = Eigen::Vector2d(0.3, 0.7);
  mix.means = {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 2.0)};
  mix.covariances = {Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Constant(1, 1, 2.0)};
  GaussianMixture swapped;
  swapped.weights = Eigen::Vector2d(0.7, 0.3);
  swapped.means = {mix.means[1], mix.means[0]};
  swapped.covariances = {mix.covariances[1], mix.covariances[0]};
  Eigen::MatrixXd pts(4, 1);
  pts << -1.0, 0.0, 1.5, 40.0;  // the far point checks log-sum-exp stability
  const double ll = log_likelihood(mix, pts);
  CHECK(std::isfinite(ll));
  CHECK_THAT(log_likelihood(swapped, pts), WithinAbs(ll, 1e-12));

  double direct = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double x = pts(i, 0);
    const double d = 0.3 * std::exp(-0.5 * (x + 1) * (x + 1) / 0.5) / std::sqrt(2 * M_PI * 0.5) +
                     0.7 * std::exp(-0.5 * (x - 2) * (x - 2) / 2.0) / std::sqrt(2 * M_PI * 2.0);
    direct += std::log(d);
  }
  CHECK_THAT(log_likelihood(mix, pts.topRows(3)), WithinAbs(direct, 1e-12));
}

TEST_CASE("fit, resample, refit is self-consistent", "[slow]") {
  Engine rng(10);
  const GaussianMixture first = fit_gaussian_mixture(two_bumps(2000, 11), 2, EmConfig{}, rng);
  const Eigen::MatrixXd resampled = sample(first, 100000, rng);
  const GaussianMixture second = fit_gaussian_mixture(resampled, 2, EmConfig{}, rng);
  auto sorted_means = [](const GaussianMixture& g) {
    double a = g.means[0][0], b = g.means[1][0];
    return std::make_pair(std::min(a, b), std::max(a, b));
  };
  const auto [a0, a1] = sorted_means(first);
  const auto [b0, b1] = sorted_means(second);
  CHECK_THAT(b0, WithinAbs(a0, 0.1));
  CHECK_THAT(b1, WithinAbs(a1, 0.1));
}
