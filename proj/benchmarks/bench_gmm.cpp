#include <benchmark/benchmark.h>

#include "bench_support.hpp"
#include "mlm/gmm.hpp"

static void fit_gmm_blobs(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  Eigen::MatrixXd x = bench::gaussian_blobs(n, 8, k, 0.7, 11);
  for (auto _ : state) {
    mlm::Gmm g = mlm::fit_gmm(x, k, mlm::CovKind::Full, 7);
    benchmark::DoNotOptimize(g.log_likelihood);
  }
}
BENCHMARK(fit_gmm_blobs)->Args({500, 4})->Args({2000, 8});

static void gmm_log_density(benchmark::State& state) {
  Eigen::MatrixXd x = bench::gaussian_blobs(1000, 8, 4, 0.7, 11);
  mlm::Gmm g = mlm::fit_gmm(x, 4, mlm::CovKind::Full, 7);
  mlm::GmmEvaluator eval(g);
  Eigen::VectorXd q = x.row(17).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(eval.log_density(q));
}
BENCHMARK(gmm_log_density);

static void gmm_marginal(benchmark::State& state) {
  Eigen::MatrixXd x = bench::gaussian_blobs(1000, 8, 4, 0.7, 11);
  mlm::Gmm g = mlm::fit_gmm(x, 4, mlm::CovKind::Full, 7);
  for (auto _ : state) {
    mlm::Gmm m = mlm::marginal(g, {0, 3, 5});
    benchmark::DoNotOptimize(m.k);
  }
}
BENCHMARK(gmm_marginal);
