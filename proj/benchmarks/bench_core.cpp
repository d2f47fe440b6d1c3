#include <benchmark/benchmark.h>

#include "utc/company.hpp"
#include "utc/gaussian_mixture.hpp"
#include "utc/synthetic.hpp"

namespace {

const utc::ReturnPanel& panel() {
  static const utc::ReturnPanel p = [] {
    utc::SyntheticSpec spec;
    spec.n_samples = 2000;
    return utc::gen_nonlinear(spec);
  }();
  return p;
}

utc::TraderHyperParams hyper() {
  utc::TraderHyperParams h;
  h.num_stocks = 2;
  return h;
}

void BM_Signal(benchmark::State& state) {
  utc::Engine rng(1);
  const utc::Trader t = utc::sample_random_trader(hyper(), 0, 1.0, rng);
  Eigen::VectorXd z(t.params.num_terms());
  int u = 100;
  for (auto _ : state) {
    utc::compute_signal_unchecked(t.params, panel(), u, z.data());
    benchmark::DoNotOptimize(z.data());
    u = u == 1990 ? 100 : u + 1;
  }
}
BENCHMARK(BM_Signal);

void BM_Aggregate(benchmark::State& state) {
  utc::TrainConfig cfg;
  cfg.num_traders = static_cast<int>(state.range(0));
  const utc::Company c = utc::make_company(utc::Mode::UTC, hyper(), cfg, 0);
  for (auto _ : state) benchmark::DoNotOptimize(utc::aggregate_predict(c, panel(), 500));
}
BENCHMARK(BM_Aggregate)->Arg(50)->Arg(200);

void BM_FitEm(benchmark::State& state) {
  utc::Engine rng(2);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(180, static_cast<Eigen::Index>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(utc::fit_em(x, 3, utc::EmConfig{}, rng).log_likelihood);
  }
}
BENCHMARK(BM_FitEm)->Arg(8)->Arg(71)->Unit(benchmark::kMillisecond);

void BM_TrainRound(benchmark::State& state) {
  utc::TrainConfig cfg;
  cfg.num_traders = static_cast<int>(state.range(0));
  const utc::Company c = utc::make_company(utc::Mode::UTC, hyper(), cfg, 0);
  const utc::TrainingRange rows{hyper().max_history(), 1798};
  for (auto _ : state) benchmark::DoNotOptimize(utc::train(c, panel(), rows, 1).company.generation);
}
BENCHMARK(BM_TrainRound)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
