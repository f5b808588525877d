#include <benchmark/benchmark.h>

#include "bench_support.hpp"
#include "mlm/mixture.hpp"
#include "mlm/mlp.hpp"
#include "mlm/pipeline.hpp"

static void mlp_epoch(benchmark::State& state) {
  mlm::Dataset ds = bench::piecewise_dataset(2000, 3);
  for (auto _ : state) {
    mlm::MlpModel m = mlm::train_mlp(ds, {16, 16}, 1, 32, 0.05, 7);
    benchmark::DoNotOptimize(m.train_loss.back());
  }
}
BENCHMARK(mlp_epoch);

static void ward_merge(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(0.1, 4.0);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) d(a, b) = d(b, a) = unif(rng);
  for (auto _ : state) {
    auto steps = mlm::ward_linkage(d);
    benchmark::DoNotOptimize(steps.size());
  }
}
BENCHMARK(ward_merge)->Arg(32)->Arg(128);

static void soft_predict(benchmark::State& state) {
  mlm::Dataset ds = bench::piecewise_dataset(2000, 3);
  mlm::PipelineConfig cfg;
  cfg.data = "unused";
  cfg.target = "y";
  cfg.task = mlm::Task::Regression;
  cfg.widths = {16, 16};
  cfg.epochs = 40;
  cfg.k_per_layer = 2;
  cfg.epics = 2;
  cfg.seed = 7;
  mlm::TrainedArtifact art = mlm::train_core(ds, cfg);
  for (auto _ : state) {
    Eigen::VectorXd p = mlm::predict_soft_rows(art.mlm, ds.x);
    benchmark::DoNotOptimize(p.sum());
  }
}
BENCHMARK(soft_predict);
