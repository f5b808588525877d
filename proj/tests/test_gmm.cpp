#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mlm/gmm.hpp"

using namespace mlm;

namespace {

Eigen::MatrixXd gaussian_cloud(int n, int d, const Eigen::VectorXd& center,
                               double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = center[j] + sd * gauss(rng);
  return x;
}

Gmm standard_normal_1d() {
  Gmm g;
  g.k = 1;
  g.priors = Eigen::VectorXd::Ones(1);
  g.means = {Eigen::VectorXd::Zero(1)};
  g.covariances = {Eigen::MatrixXd::Identity(1, 1)};
  return g;
}

// Plain Lloyd iterations from fixed extreme starting centers; exact on
// well-separated data.
std::vector<int> two_means_oracle(const Eigen::MatrixXd& x) {
  Eigen::Index lo, hi;
  x.col(0).minCoeff(&lo);
  x.col(0).maxCoeff(&hi);
  Eigen::VectorXd c0 = x.row(lo), c1 = x.row(hi);
  std::vector<int> labels(static_cast<size_t>(x.rows()), 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      int want = (x.row(i).transpose() - c0).squaredNorm() <=
                         (x.row(i).transpose() - c1).squaredNorm()
                     ? 0
                     : 1;
      if (want != labels[static_cast<size_t>(i)]) {
        labels[static_cast<size_t>(i)] = want;
        changed = true;
      }
    }
    Eigen::VectorXd s0 = Eigen::VectorXd::Zero(x.cols());
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(x.cols());
    int n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (labels[static_cast<size_t>(i)] == 0) {
        s0 += x.row(i);
        ++n0;
      } else {
        s1 += x.row(i);
        ++n1;
      }
    }
    if (n0) c0 = s0 / n0;
    if (n1) c1 = s1 / n1;
    if (!changed) break;
  }
  return labels;
}

}  // namespace

TEST_CASE("fit_gmm k=1 reproduces the closed-form single component") {
  std::mt19937_64 rng(3);
  Eigen::VectorXd center(2);
  center << 1.5, -2.0;
  Eigen::MatrixXd x = gaussian_cloud(200, 2, center, 1.3, rng);

  Gmm g = fit_gmm(x, 1, CovKind::Full, 42);
  CHECK(g.priors[0] == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::VectorXd mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / 200.0;
  double mean_var = cov.trace() / 2.0;
  double reg = std::max(1e-6 * mean_var, 1e-12);
  cov.diagonal().array() += reg;

  CHECK((g.means[0] - mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((g.covariances[0] - cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit_gmm separates two spherical clusters like 2-means") {
  std::mt19937_64 rng(5);
  Eigen::VectorXd left(2), right(2);
  left << -5, 0;
  right << 5, 0;
  Eigen::MatrixXd x(200, 2);
  x.topRows(100) = gaussian_cloud(100, 2, left, 1.0, rng);
  x.bottomRows(100) = gaussian_cloud(100, 2, right, 1.0, rng);

  Gmm g = fit_gmm(x, 2, CovKind::Full, 9);
  std::vector<int> oracle = two_means_oracle(x);
  GmmEvaluator eval(g);

  // agreement up to label swap
  int same = 0, flipped = 0;
  for (Eigen::Index i = 0; i < 200; ++i) {
    int got = eval.map_assign(x.row(i).transpose());
    if (got == oracle[static_cast<size_t>(i)]) ++same;
    else ++flipped;
  }
  CHECK((same == 200 || flipped == 200));
}

TEST_CASE("fit_gmm with k = m flags the degenerate regime or throws") {
  Eigen::MatrixXd x(5, 2);
  x << 0, 0, 1, 0, 2, 1, 3, 2, 4, 4;
  try {
    Gmm g = fit_gmm(x, 5, CovKind::Full, 3);
    CHECK(g.degenerate_flagged);
  } catch (const MlmError& e) {
    CHECK(e.kind() == Err::DegenerateComponent);
  }
}

TEST_CASE("fit_gmm input validation") {
  Eigen::MatrixXd x(3, 2);
  x.setRandom();
  CHECK_THROWS_AS(fit_gmm(x, 4, CovKind::Full, 1), MlmError);
  CHECK_THROWS_AS(fit_gmm(x, 0, CovKind::Full, 1), MlmError);
}

TEST_CASE("EM log-likelihood is monotone") {
  std::mt19937_64 rng(11);
  for (int instance = 0; instance < 10; ++instance) {
    Eigen::VectorXd a(3), b(3), c(3);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int j = 0; j < 3; ++j) {
      a[j] = gauss(rng);
      b[j] = gauss(rng);
      c[j] = gauss(rng);
    }
    Eigen::MatrixXd x(150, 3);
    x.topRows(50) = gaussian_cloud(50, 3, a, 0.8, rng);
    x.middleRows(50, 50) = gaussian_cloud(50, 3, b, 1.1, rng);
    x.bottomRows(50) = gaussian_cloud(50, 3, c, 0.9, rng);

    std::vector<double> history;
    fit_gmm(x, 3, CovKind::Full, 100 + instance, 200, 1e-7, &history);
    REQUIRE(history.size() >= 2);
    for (size_t t = 1; t < history.size(); ++t)
      CHECK(history[t] >= history[t - 1] - 1e-9);
  }
}

TEST_CASE("posterior responsibilities sum to one") {
  std::mt19937_64 rng(17);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2), b(2);
  b << 4, 1;
  Eigen::MatrixXd x(80, 2);
  x.topRows(40) = gaussian_cloud(40, 2, a, 1.0, rng);
  x.bottomRows(40) = gaussian_cloud(40, 2, b, 1.0, rng);
  Gmm g = fit_gmm(x, 2, CovKind::Full, 21);
  for (int i = 0; i < 80; ++i) {
    Eigen::VectorXd post = posterior(g, x.row(i).transpose());
    CHECK(post.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(post.minCoeff() >= 0.0);
  }
}

TEST_CASE("map_assign: proximity, tie-break, prior flip") {
  Gmm g;
  g.k = 2;
  g.priors = Eigen::VectorXd::Constant(2, 0.5);
  g.means = {Eigen::VectorXd::Constant(1, -5.0),
             Eigen::VectorXd::Constant(1, 5.0)};
  g.covariances = {Eigen::MatrixXd::Identity(1, 1),
                   Eigen::MatrixXd::Identity(1, 1)};

  Eigen::VectorXd near_left(1);
  near_left << -4.0;
  CHECK(map_assign(g, near_left) == 0);

  Eigen::VectorXd midpoint(1);
  midpoint << 0.0;
  CHECK(map_assign(g, midpoint) == 0);  // exact tie -> lowest index

  // skewed priors flip the midpoint; verify against direct densities
  g.priors << 0.01, 0.99;
  CHECK(map_assign(g, midpoint) == 1);
  GmmEvaluator eval(g);
  Eigen::VectorXd wld = eval.weighted_log_densities(midpoint);
  CHECK(wld[1] > wld[0]);
}

TEST_CASE("log_density closed forms") {
  Gmm g = standard_normal_1d();
  Eigen::VectorXd zero(1);
  zero << 0.0;
  CHECK(log_density(g, zero) == doctest::Approx(-0.9189385).epsilon(1e-6));

  // two identical components with equal priors collapse
  Gmm twin = g;
  twin.k = 2;
  twin.priors = Eigen::VectorXd::Constant(2, 0.5);
  twin.means.push_back(twin.means[0]);
  twin.covariances.push_back(twin.covariances[0]);
  Eigen::VectorXd at(1);
  at << 0.7;
  CHECK(log_density(twin, at) ==
        doctest::Approx(log_density(g, at)).epsilon(1e-12));

  // far tail stays finite and matches the analytic value
  Eigen::VectorXd far(1);
  far << 40.0;
  double expect = -0.5 * 40.0 * 40.0 - 0.9189385332046727;
  CHECK(std::isfinite(log_density(g, far)));
  CHECK(log_density(g, far) == doctest::Approx(expect).epsilon(1e-9));

  Eigen::VectorXd wrong(2);
  CHECK_THROWS_AS(log_density(g, wrong), MlmError);
}

TEST_CASE("marginal: identity, coordinate restriction, validation") {
  std::mt19937_64 rng(23);
  Eigen::VectorXd c(3);
  c << 1, 2, 3;
  Eigen::MatrixXd x = gaussian_cloud(120, 3, c, 1.0, rng);
  Gmm g = fit_gmm(x, 2, CovKind::Diagonal, 31);

  Gmm all = marginal(g, {0, 1, 2});
  CHECK((all.means[0] - g.means[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((all.covariances[1] - g.covariances[1]).cwiseAbs().maxCoeff() == 0.0);

  Gmm first = marginal(g, {0});
  CHECK(first.dim() == 1);
  CHECK(first.means[0][0] == g.means[0][0]);
  CHECK(first.covariances[0](0, 0) == g.covariances[0](0, 0));
  CHECK(first.priors == g.priors);

  CHECK_THROWS_AS(marginal(g, {}), MlmError);
  CHECK_THROWS_AS(marginal(g, {3}), MlmError);
  CHECK_THROWS_AS(marginal(g, {0, 0}), MlmError);
}

TEST_CASE("marginal of a full-covariance mixture matches quadrature") {
  // correlated 2-D components
  Gmm g;
  g.k = 2;
  g.priors = Eigen::VectorXd(2);
  g.priors << 0.3, 0.7;
  Eigen::VectorXd m1(2), m2(2);
  m1 << 0.0, 1.0;
  m2 << 2.5, -1.0;
  Eigen::MatrixXd c1(2, 2), c2(2, 2);
  c1 << 1.0, 0.6, 0.6, 2.0;
  c2 << 1.5, -0.4, -0.4, 0.8;
  g.means = {m1, m2};
  g.covariances = {c1, c2};

  Gmm marg = marginal(g, {0});

  // trapezoid quadrature over x2 at several x1 values
  auto joint = [&](double x1, double x2) {
    Eigen::VectorXd v(2);
    v << x1, x2;
    return std::exp(log_density(g, v));
  };
  for (double x1 : {-1.0, 0.0, 0.8, 2.5, 4.0}) {
    double integral = 0.0;
    const int grid = 4001;
    const double lo = -20.0, hi = 20.0;
    double h = (hi - lo) / (grid - 1);
    for (int i = 0; i < grid; ++i) {
      double w = (i == 0 || i == grid - 1) ? 0.5 : 1.0;
      integral += w * joint(x1, lo + i * h);
    }
    integral *= h;
    Eigen::VectorXd v1(1);
    v1 << x1;
    CHECK(std::exp(log_density(marg, v1)) ==
          doctest::Approx(integral).epsilon(1e-3));
  }

  // the marginal itself integrates to ~1
  double total = 0.0;
  const int grid = 8001;
  const double lo = -25.0, hi = 25.0;
  double h = (hi - lo) / (grid - 1);
  for (int i = 0; i < grid; ++i) {
    Eigen::VectorXd v1(1);
    v1 << lo + i * h;
    double w = (i == 0 || i == grid - 1) ? 0.5 : 1.0;
    total += w * std::exp(log_density(marg, v1));
  }
  total *= h;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("pooled fit shares one covariance bit-identically") {
  std::mt19937_64 rng(29);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2), b(2);
  b << 6, 0;
  Eigen::MatrixXd x(100, 2);
  x.topRows(70) = gaussian_cloud(70, 2, a, 1.0, rng);
  x.bottomRows(30) = gaussian_cloud(30, 2, b, 0.5, rng);
  Gmm g = fit_gmm(x, 2, CovKind::Pooled, 7);
  CHECK(g.covariances[0] == g.covariances[1]);
}

TEST_CASE("spherical and diagonal structures hold") {
  std::mt19937_64 rng(31);
  Eigen::VectorXd c(3);
  c << 0, 0, 0;
  Eigen::MatrixXd x = gaussian_cloud(150, 3, c, 1.0, rng);

  Gmm sph = fit_gmm(x, 2, CovKind::Spherical, 7);
  for (const auto& cov : sph.covariances) {
    CHECK(cov(0, 0) == cov(1, 1));
    CHECK(cov(1, 1) == cov(2, 2));
    CHECK(cov(0, 1) == 0.0);
  }
  Gmm diag = fit_gmm(x, 2, CovKind::Diagonal, 7);
  for (const auto& cov : diag.covariances) {
    CHECK(cov(0, 1) == 0.0);
    CHECK(cov(0, 2) == 0.0);
    CHECK(cov(1, 2) == 0.0);
  }
}

TEST_CASE("fit_gmm is deterministic for a fixed seed") {
  std::mt19937_64 rng(37);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2), b(2);
  b << 3, 3;
  Eigen::MatrixXd x(60, 2);
  x.topRows(30) = gaussian_cloud(30, 2, a, 1.0, rng);
  x.bottomRows(30) = gaussian_cloud(30, 2, b, 1.0, rng);

  Gmm g1 = fit_gmm(x, 2, CovKind::Full, 77);
  Gmm g2 = fit_gmm(x, 2, CovKind::Full, 77);
  CHECK(g1.log_likelihood == g2.log_likelihood);
  CHECK(g1.means[0] == g2.means[0]);
  CHECK(g1.covariances[1] == g2.covariances[1]);
}
