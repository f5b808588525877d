#ifndef MLM_BENCH_SUPPORT_HPP
#define MLM_BENCH_SUPPORT_HPP

#include <Eigen/Dense>
#include <random>

#include "mlm/dataset.hpp"

namespace bench {

inline Eigen::MatrixXd gaussian_blobs(int n, int d, int clusters,
                                      double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    int c = i % clusters;
    for (int j = 0; j < d; ++j)
      x(i, j) = 6.0 * c * (j == 0 ? 1.0 : 0.1) + spread * gauss(rng);
  }
  return x;
}

inline mlm::Dataset piecewise_dataset(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  mlm::Dataset ds;
  ds.task = mlm::Task::Regression;
  ds.x.resize(n, 4);
  ds.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) ds.x(i, j) = gauss(rng);
    double x1 = ds.x(i, 0);
    double slope = x1 > 0 ? 2.0 : -2.5;
    ds.y[i] = 1.0 + slope * x1 - 1.5 * ds.x(i, 1) + 0.5 * ds.x(i, 2) +
              2.0 * ds.x(i, 3) + 0.1 * gauss(rng);
  }
  for (int j = 0; j < 4; ++j) {
    ds.feature_names.push_back("x" + std::to_string(j + 1));
    ds.column_kinds.push_back(mlm::ColumnKind::Continuous);
  }
  return ds;
}

}  // namespace bench

#endif  // MLM_BENCH_SUPPORT_HPP
