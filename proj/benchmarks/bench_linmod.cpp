#include <benchmark/benchmark.h>

#include <random>

#include "mlm/linmod.hpp"

namespace {

struct Problem {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Problem regression_problem(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Problem prob;
  prob.x.resize(n, p);
  prob.y.resize(n);
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta[j] = (j % 3 == 0) ? 1.5 : 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) prob.x(i, j) = gauss(rng);
    prob.y[i] = prob.x.row(i).dot(beta) + 0.3 * gauss(rng);
  }
  return prob;
}

}  // namespace

static void ols_fit(benchmark::State& state) {
  Problem prob = regression_problem(static_cast<int>(state.range(0)),
                                    static_cast<int>(state.range(1)), 5);
  for (auto _ : state) {
    mlm::LinearModel m = mlm::fit_ols(prob.x, prob.y);
    benchmark::DoNotOptimize(m.intercept);
  }
}
BENCHMARK(ols_fit)->Args({500, 16})->Args({5000, 16});

static void lasso_fit(benchmark::State& state) {
  Problem prob = regression_problem(static_cast<int>(state.range(0)),
                                    static_cast<int>(state.range(1)), 5);
  for (auto _ : state) {
    mlm::LinearModel m = mlm::fit_lasso(prob.x, prob.y, 0.1);
    benchmark::DoNotOptimize(m.intercept);
  }
}
BENCHMARK(lasso_fit)->Args({500, 16})->Args({5000, 64});

static void logistic_fit(benchmark::State& state) {
  Problem prob = regression_problem(static_cast<int>(state.range(0)), 16, 5);
  Eigen::VectorXd labels(prob.y.size());
  for (Eigen::Index i = 0; i < prob.y.size(); ++i)
    labels[i] = prob.y[i] > 0 ? 1.0 : 0.0;
  for (auto _ : state) {
    mlm::LinearModel m = mlm::fit_logistic(prob.x, labels, 0.0);
    benchmark::DoNotOptimize(m.intercept);
  }
}
BENCHMARK(logistic_fit)->Arg(500)->Arg(2000);
