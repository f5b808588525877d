#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mlm/linmod.hpp"

using namespace mlm;

namespace {

struct Xy {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Xy random_regression(int n, int p, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Xy out;
  out.x.resize(n, p);
  out.y.resize(n);
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta[j] = gauss(rng);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) out.x(i, j) = gauss(rng);
    out.y[i] = 0.7 + out.x.row(i).dot(beta) + noise * gauss(rng);
  }
  return out;
}

// Independent route: normal equations solved with an explicit inverse.
Eigen::VectorXd normal_equation_oracle(const Eigen::MatrixXd& x,
                                       const Eigen::VectorXd& y) {
  Eigen::MatrixXd g(x.rows(), x.cols() + 1);
  g.col(0).setOnes();
  g.rightCols(x.cols()) = x;
  Eigen::MatrixXd gram = g.transpose() * g;
  return gram.inverse() * (g.transpose() * y);
}

}  // namespace

TEST_CASE("fit_ols recovers an exact line") {
  Eigen::MatrixXd x(2, 1);
  x << 0, 1;
  Eigen::VectorXd y(2);
  y << 1, 3;
  LinearModel m = fit_ols(x, y);
  CHECK(m.intercept == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.coefficients[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("fit_ols on a constant target") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 2, 3, 4, 5, 6, 7, 9;
  Eigen::VectorXd y = Eigen::VectorXd::Constant(4, 3.5);
  LinearModel m = fit_ols(x, y);
  CHECK(m.intercept == doctest::Approx(3.5).epsilon(1e-9));
  CHECK(m.coefficients.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fit_ols matches the normal-equation oracle") {
  Xy prob = random_regression(50, 3, 0.5, 11);
  LinearModel m = fit_ols(prob.x, prob.y);
  Eigen::VectorXd oracle = normal_equation_oracle(prob.x, prob.y);
  CHECK(std::abs(m.intercept - oracle[0]) < 1e-8);
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(m.coefficients[j] - oracle[j + 1]) < 1e-8);
}

TEST_CASE("fit_ols residuals are orthogonal to the design") {
  Xy prob = random_regression(60, 4, 1.0, 5);
  LinearModel m = fit_ols(prob.x, prob.y);
  Eigen::VectorXd resid =
      prob.y - (prob.x * m.coefficients).array().matrix() -
      Eigen::VectorXd::Constant(60, m.intercept);
  CHECK(std::abs(resid.sum()) < 1e-8);
  for (int j = 0; j < 4; ++j)
    CHECK(std::abs(prob.x.col(j).dot(resid)) < 1e-8);
}

TEST_CASE("fit_ols falls back to ridge on rank-deficient designs") {
  Eigen::MatrixXd x(5, 2);
  for (int i = 0; i < 5; ++i) {
    x(i, 0) = i;
    x(i, 1) = 2.0 * i;  // collinear
  }
  Eigen::VectorXd y = x.col(0) * 3.0;
  LinearModel m = fit_ols(x, y);
  CHECK(m.ridge_fallback);
  CHECK_FALSE(m.coef_stderr.has_value());
  // the fit still predicts well
  Eigen::VectorXd pred = lm_predict_rows(m, x);
  CHECK((pred - y).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("fit_lasso with alpha 0 matches OLS") {
  Xy prob = random_regression(80, 4, 0.3, 17);
  LinearModel ols = fit_ols(prob.x, prob.y);
  LinearModel lasso = fit_lasso(prob.x, prob.y, 0.0);
  CHECK(std::abs(ols.intercept - lasso.intercept) < 1e-6);
  for (int j = 0; j < 4; ++j)
    CHECK(std::abs(ols.coefficients[j] - lasso.coefficients[j]) < 1e-6);
}

TEST_CASE("fit_lasso zeroes everything at lambda_max") {
  Xy prob = random_regression(100, 5, 0.5, 23);
  // center columns and target so the lambda_max formula applies
  Eigen::MatrixXd xc = prob.x.rowwise() - prob.x.colwise().mean();
  Eigen::VectorXd yc = prob.y.array() - prob.y.mean();
  double lambda_max = 0.0;
  for (int j = 0; j < 5; ++j)
    lambda_max = std::max(lambda_max,
                          std::abs(xc.col(j).dot(yc)) / 100.0);

  LinearModel at = fit_lasso(xc, yc, lambda_max + 1e-12);
  CHECK(at.coefficients.cwiseAbs().maxCoeff() == 0.0);
  LinearModel below = fit_lasso(xc, yc, 0.9 * lambda_max);
  CHECK(below.coefficients.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("fit_lasso satisfies the KKT conditions") {
  Xy prob = random_regression(120, 6, 0.7, 31);
  double alpha = 0.15;
  LinearModel m = fit_lasso(prob.x, prob.y, alpha);
  Eigen::VectorXd resid =
      prob.y - (prob.x * m.coefficients).array().matrix() -
      Eigen::VectorXd::Constant(120, m.intercept);
  for (int j = 0; j < 6; ++j) {
    double corr = prob.x.col(j).dot(resid) / 120.0;
    if (m.coefficients[j] != 0.0)
      CHECK(std::abs(std::abs(corr) - alpha) < 1e-6);
    else
      CHECK(std::abs(corr) <= alpha + 1e-6);
  }
}

TEST_CASE("fit_lasso objective never increases across cycles") {
  Xy prob = random_regression(90, 8, 0.6, 41);
  std::vector<double> objective;
  fit_lasso(prob.x, prob.y, 0.1, 10000, 1e-8, &objective);
  REQUIRE(objective.size() >= 2);
  for (size_t i = 1; i < objective.size(); ++i)
    CHECK(objective[i] <= objective[i - 1] + 1e-12);
}

TEST_CASE("fit_logistic: symmetric classes give a near-zero intercept") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int n = 4000;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  // y depends on x symmetrically: P(1|x) = sigmoid(2x), x ~ N(0,1)
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = gauss(rng);
    y[i] = unif(rng) < 1.0 / (1.0 + std::exp(-2.0 * x(i, 0))) ? 1.0 : 0.0;
  }
  LinearModel m = fit_logistic(x, y, 0.0);
  CHECK(std::abs(m.intercept) < 1e-1);

  // exactly symmetric four-point configuration: intercept 0 to 1e-3
  Eigen::MatrixXd xs(4, 1);
  xs << -2, -1, 1, 2;
  Eigen::VectorXd ys(4);
  ys << 0, 1, 0, 1;  // overlapping, symmetric around 0
  LinearModel sym = fit_logistic(xs, ys, 0.0);
  CHECK(std::abs(sym.intercept) < 1e-3);
}

TEST_CASE("fit_logistic with a huge penalty collapses to the null model") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int n = 200;
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  int ones = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = gauss(rng);
    y[i] = (i % 10) < 3 ? 1.0 : 0.0;  // 30% positives
    ones += y[i] == 1.0;
  }
  LinearModel m = fit_logistic(x, y, 50.0);
  CHECK(m.coefficients.cwiseAbs().maxCoeff() < 1e-6);
  double rate = static_cast<double>(ones) / n;
  CHECK(m.intercept ==
        doctest::Approx(std::log(rate / (1 - rate))).epsilon(1e-3));
}

TEST_CASE("fit_logistic flags perfect separation") {
  Eigen::MatrixXd x(6, 1);
  x << -3, -2, -1, 1, 2, 3;
  Eigen::VectorXd y(6);
  y << 0, 0, 0, 1, 1, 1;
  try {
    fit_logistic(x, y, 0.0);
    FAIL("expected SeparableDegenerate");
  } catch (const MlmError& e) {
    CHECK(e.kind() == Err::SeparableDegenerate);
  }
  // a positive penalty keeps it finite
  LinearModel m = fit_logistic(x, y, 0.1);
  CHECK(std::isfinite(m.intercept));
  CHECK(std::isfinite(m.coefficients[0]));
}

TEST_CASE("lm_predict basics and affinity") {
  LinearModel m;
  m.task = Task::Regression;
  m.intercept = 1.0;
  m.coefficients = Eigen::VectorXd::Constant(1, 2.0);
  Eigen::VectorXd x(1);
  x << 3.0;
  CHECK(lm_predict(m, x) == doctest::Approx(7.0));

  LinearModel zero;
  zero.task = Task::BinaryClassification;
  zero.coefficients = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd any(2);
  any << 5, -3;
  CHECK(lm_predict(zero, any) == doctest::Approx(0.5));

  // affine: f(x + d) - f(x) = d'beta exactly
  LinearModel affine;
  affine.task = Task::Regression;
  affine.intercept = -0.3;
  affine.coefficients = Eigen::VectorXd(3);
  affine.coefficients << 1.5, -2.0, 0.25;
  Eigen::VectorXd base(3), delta(3);
  base << 1, 2, 3;
  delta << 0.5, -1, 2;
  CHECK(lm_predict(affine, base + delta) - lm_predict(affine, base) ==
        doctest::Approx(delta.dot(affine.coefficients)).epsilon(1e-15));

  Eigen::VectorXd wrong(2);
  CHECK_THROWS_AS(lm_predict(affine, wrong), MlmError);
}

TEST_CASE("confidence intervals: zero width on a noiseless fit") {
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 2;
  Eigen::VectorXd y(3);
  y << 1, 3, 5;  // exactly 1 + 2x, df = 1
  LinearModel m = fit_ols(x, y);
  ConfidenceIntervals ci = confidence_intervals(m, 0.95);
  CHECK(ci.coefficients[0].hi - ci.coefficients[0].lo < 1e-10);
  CHECK(ci.coefficients[0].estimate == doctest::Approx(2.0));
}

TEST_CASE("confidence intervals: Monte Carlo coverage") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int covered = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    int n = 1000;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = gauss(rng);
      y[i] = 2.0 * x(i, 0) + gauss(rng);
    }
    LinearModel m = fit_ols(x, y);
    ConfidenceIntervals ci = confidence_intervals(m, 0.95);
    if (ci.coefficients[0].lo <= 2.0 && 2.0 <= ci.coefficients[0].hi)
      ++covered;
  }
  CHECK(covered >= static_cast<int>(0.93 * reps));
}

TEST_CASE("confidence intervals: lasso zeroes flagged, support refit") {
  Xy prob = random_regression(150, 4, 0.4, 57);
  // make two columns irrelevant
  Eigen::VectorXd beta(4);
  beta << 2.0, 0.0, -1.5, 0.0;
  for (int i = 0; i < 150; ++i)
    prob.y[i] = prob.x.row(i).dot(beta) + 0.3 * prob.x(i, 0);
  LinearModel m = fit_lasso(prob.x, prob.y, 0.4);
  REQUIRE_FALSE(m.coef_stderr.has_value());
  CHECK_THROWS_AS(confidence_intervals(m, 0.95), MlmError);

  ConfidenceIntervals ci = confidence_intervals(m, 0.95, prob.x, prob.y);
  for (int j = 0; j < 4; ++j) {
    if (m.coefficients[j] == 0.0) {
      CHECK(ci.coefficients[j].shrunk_to_zero);
      CHECK(ci.coefficients[j].lo == 0.0);
      CHECK(ci.coefficients[j].hi == 0.0);
    } else {
      CHECK(ci.coefficients[j].lo < ci.coefficients[j].hi);
      CHECK_FALSE(ci.coefficients[j].shrunk_to_zero);
    }
  }
}

TEST_CASE("logistic stderr enables classification intervals") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int n = 500;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = gauss(rng);
    x(i, 1) = gauss(rng);
    double p = 1.0 / (1.0 + std::exp(-(0.5 + x(i, 0))));
    y[i] = unif(rng) < p ? 1.0 : 0.0;
  }
  LinearModel m = fit_logistic(x, y, 0.0);
  REQUIRE(m.coef_stderr.has_value());
  ConfidenceIntervals ci = confidence_intervals(m, 0.95);
  CHECK(ci.coefficients[0].lo < 1.0);
  CHECK(ci.coefficients[0].hi > 1.0);  // true slope 1 inside (typical draw)
}
