#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <cmath>

#include "oracles.hpp"
#include "utc/error.hpp"
#include "utc/serialization.hpp"
#include "utc/synthetic.hpp"

using namespace utc;
using nlohmann::json;

namespace {

bool same_trader(const Trader& a, const Trader& b) {
  return a.params == b.params && a.weights.mean == b.weights.mean && a.weights.cov == b.weights.cov;
}

}  // namespace

TEST_CASE("trader JSON layout and exact round trip") {
  TraderHyperParams h;
  h.num_stocks = 4;
  Engine rng(3);
  for (int k = 0; k < 50; ++k) {
    Trader t = sample_random_trader(h, 2, 0.0, rng);
    const auto m = t.params.num_terms();
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(m, m);
    t.weights.cov = a * a.transpose() / 3.0;  // arbitrary doubles must survive text
    const Trader back = trader_from_json(trader_to_json(t));
    REQUIRE(same_trader(t, back));
  }
  const json j = json::parse(trader_to_json(sample_random_trader(h, 1, 1.0, rng)));
  CHECK(j.contains("target_stock"));
  CHECK(j.at("terms").at(0).at("op").is_string());
  CHECK(j.at("weight_cov").is_array());
  CHECK_THROWS_AS(trader_from_json("{\"target_stock\": 0}"), InputError);
  CHECK_THROWS_AS(trader_from_json("not json"), InputError);
}

TEST_CASE("company and bundle round trip") {
  SyntheticSpec spec;
  spec.n_samples = 200;
  const ReturnPanel panel = gen_nonlinear(spec);
  TraderHyperParams h;
  h.num_stocks = 2;
  TrainConfig cfg;
  cfg.num_traders = 12;
  cfg.rounds = 1;
  cfg.seed = 77;
  cfg.noise_var = 0.02;
  const BundleTrainResult trained =
      train_bundle(Mode::UTC, h, cfg, panel, {0, 1}, full_training_range(h, panel));

  const Company& c = trained.bundle.companies[1];
  const std::string text = company_to_json(c);
  const Company back = company_from_json(text);
  CHECK(company_to_json(back) == text);
  CHECK(back.mode == Mode::UTC);
  CHECK(back.config.seed == 77);
  CHECK(back.config.noise_var == 0.02);
  CHECK(back.generation == c.generation);
  for (int t = 50; t < 60; ++t) {
    const auto a = aggregate_predict(c, panel, t), b = aggregate_predict(back, panel, t);
    CHECK(a.mean == b.mean);
    CHECK(a.sigma == b.sigma);
  }
  CHECK(json::parse(text).at("format_version") == kModelFormatVersion);

  const StoredModel stored = model_from_json(bundle_to_json(trained.bundle));
  CHECK(stored.kind == "company_bundle");
  REQUIRE(stored.bundle.has_value());
  CHECK(stored.symbols == panel.symbols());
  CHECK(company_to_json(stored.bundle->companies[0]) == company_to_json(trained.bundle.companies[0]));

  json wrong = json::parse(text);
  wrong["format_version"] = kModelFormatVersion + 1;
  CHECK_THROWS_WITH(company_from_json(wrong.dump()), Catch::Matchers::ContainsSubstring("version"));
}

TEST_CASE("VAR model round trip") {
  VarModel m;
  m.lag = 2;
  m.intercept = Eigen::Vector2d(0.1, -1.0 / 3.0);
  m.coefficients = {Eigen::Matrix2d::Random(), Eigen::Matrix2d::Random()};
  m.residual_cov = Eigen::Matrix2d::Identity() * 0.7;
  m.effective_samples = 97;
  const StoredModel s = model_from_json(var_to_json(m, {"a", "b"}));
  CHECK(s.kind == "var");
  REQUIRE(s.var.has_value());
  CHECK(s.var->lag == 2);
  CHECK(s.var->intercept == m.intercept);
  CHECK(s.var->coefficients[1] == m.coefficients[1]);
  CHECK(s.var->residual_cov == m.residual_cov);
  CHECK(s.var->effective_samples == 97);
  CHECK(s.symbols == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(model_from_json("{\"format_version\": 1, \"kind\": \"forest\"}"), InputError);
}

TEST_CASE("report and round records") {
  const BacktestReport flat = compute_metrics(Eigen::VectorXd::Zero(4), 250.0);
  const json f = json::parse(report_to_json(flat));
  CHECK(f.at("sr").is_null());
  CHECK(f.at("sr_defined") == false);
  CHECK(f.at("cr_defined") == false);
  CHECK(f.at("t_y") == 250.0);

  const BacktestReport r = compute_metrics(Eigen::Vector3d(0.01, -0.02, 0.03), 250.0);
  const json j = json::parse(report_to_json(r));
  CHECK(j.at("ar").get<double>() == r.ar);
  CHECK(j.at("mdd").get<double>() == r.mdd);
  CHECK(j.at("cr").get<double>() == *r.cr);

  RoundStats s;
  s.round = 3;
  s.mean_r = 0.5;
  s.n_educated = 20;
  s.n_pruned = 40;
  const json line = json::parse(round_stats_to_json(s, "y0"));
  CHECK(line.at("round") == 3);
  CHECK(line.at("mean_R") == 0.5);
  CHECK(line.at("n_pruned") == 40);
  CHECK(line.at("symbol") == "y0");
  CHECK_FALSE(json::parse(round_stats_to_json(s)).contains("symbol"));
  CHECK(round_stats_to_json(s).find('\n') == std::string::npos);
}

TEST_CASE("text files") {
  testing::TempDir dir("ser");
  save_text(dir.file("a.json"), "{}\n");
  CHECK(load_text(dir.file("a.json")) == "{}\n");
  CHECK_THROWS_AS(load_text(dir.file("missing.json")), InputError);
}
