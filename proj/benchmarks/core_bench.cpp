#include <benchmark/benchmark.h>

#include "riskagg/cluster.hpp"
#include "riskagg/nnet.hpp"
#include "riskagg/pca.hpp"
#include "riskagg/stress.hpp"
#include "riskagg/synthetic.hpp"

using namespace riskagg;

namespace {

StandardizedPanel block_panel(Eigen::Index n, Eigen::Index blocks) {
  Rng rng(1);
  const std::vector<Eigen::Index> sizes(static_cast<std::size_t>(blocks), 4);
  const Eigen::MatrixXd corr = synthetic::block_correlation(sizes, 0.7, 0.1);
  return standardize(synthetic::make_panel(synthetic::correlated_sample(n, corr, rng), {}));
}

void BM_FitPca(benchmark::State& state) {
  const StandardizedPanel panel = block_panel(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(fit_pca(panel));
}
BENCHMARK(BM_FitPca)->Args({250, 7})->Args({6000, 7})->Args({6000, 25});

void BM_WardCluster(benchmark::State& state) {
  const StandardizedPanel panel = block_panel(1000, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ward_cluster(panel));
}
BENCHMARK(BM_WardCluster)->Arg(7)->Arg(25);

void BM_TrainEpoch(benchmark::State& state) {
  const StandardizedPanel panel = block_panel(2000, 7);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.batch_size = static_cast<int>(state.range(0));
  cfg.validation_fraction = 0.0;
  cfg.patience = 0;
  for (auto _ : state) {
    Rng rng(2);
    benchmark::DoNotOptimize(train(make_autoencoder(28, 6, {{60}, Activation::Swish, true}, rng), panel.values, cfg));
  }
}
BENCHMARK(BM_TrainEpoch)->Arg(32)->Arg(256);

void BM_ConditionalStress(benchmark::State& state) {
  const Eigen::Index k = state.range(0);
  Rng rng(3);
  const Eigen::MatrixXd a = synthetic::standard_normal(k, k, rng);
  FactorModel m;
  m.factor_labels = synthetic::numbered_labels("F", k);
  m.asset_labels = synthetic::numbered_labels("a", 1);
  m.alphas = Eigen::VectorXd::Zero(1);
  m.betas = Eigen::MatrixXd::Ones(1, k);
  m.residual_variances = Eigen::VectorXd::Zero(1);
  m.factor_mean = Eigen::VectorXd::Zero(k);
  m.factor_covariance = a * a.transpose() + Eigen::MatrixXd::Identity(k, k);
  m.factor_sd = m.factor_covariance.diagonal().cwiseSqrt();
  m.observations = 750;
  const StressScenario s{"b", {"F1", "F2"}, {-2.0, -1.0}, Propagation::ConditionalGaussian};
  for (auto _ : state) benchmark::DoNotOptimize(conditional_stress(m, s));
}
BENCHMARK(BM_ConditionalStress)->Arg(6)->Arg(27);

}  // namespace

BENCHMARK_MAIN();
