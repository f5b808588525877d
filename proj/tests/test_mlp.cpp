#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mlm/mlp.hpp"
#include "synthetic.hpp"

using namespace mlm;

namespace {

MlpModel hand_relu_net() {
  // 1 hidden unit: h = relu(1*x + 0), out = 2*h + 1
  MlpModel m;
  m.activation = Activation::ReLU;
  m.output_link = OutputLink::Linear;
  m.weights = {Eigen::MatrixXd::Constant(1, 1, 1.0),
               Eigen::MatrixXd::Constant(1, 1, 2.0)};
  m.biases = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  return m;
}

MlpModel random_net(const std::vector<int>& widths, int input_dim,
                    OutputLink link, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.6);
  MlpModel m;
  m.activation = Activation::Tanh;
  m.output_link = link;
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int w : widths) dims.push_back(w);
  dims.push_back(1);
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = gauss(rng);
    m.weights.push_back(w);
    Eigen::VectorXd b(dims[l + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = 0.1 * gauss(rng);
    m.biases.push_back(b);
  }
  return m;
}

}  // namespace

TEST_CASE("train_mlp fits y = 2x to a small MSE") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Dataset ds;
  ds.task = Task::Regression;
  ds.x.resize(200, 1);
  ds.y.resize(200);
  for (int i = 0; i < 200; ++i) {
    ds.x(i, 0) = unif(rng);
    ds.y[i] = 2.0 * ds.x(i, 0);
  }
  ds.feature_names = {"x"};
  ds.column_kinds = {ColumnKind::Continuous};

  MlpModel m = train_mlp(ds, {8}, 200, 16, 0.1, 7);
  CHECK(m.train_loss.back() < 0.01);
  CHECK(m.train_loss.size() == 200);
}

TEST_CASE("train_mlp rejects zero epochs and bad arguments") {
  auto planted = synth::two_region_regression(20, 0.1, 2);
  CHECK_THROWS_AS(train_mlp(planted.data, {8}, 0, 16, 0.1, 7), MlmError);
  CHECK_THROWS_AS(train_mlp(planted.data, {}, 10, 16, 0.1, 7), MlmError);
  CHECK_THROWS_AS(train_mlp(planted.data, {8}, 10, 0, 0.1, 7), MlmError);
  CHECK_THROWS_AS(train_mlp(planted.data, {8}, 10, 16, -0.1, 7), MlmError);
}

TEST_CASE("train_mlp solves XOR with tanh") {
  Dataset ds;
  ds.task = Task::BinaryClassification;
  ds.x.resize(100, 2);
  ds.y.resize(100);
  for (int i = 0; i < 100; ++i) {
    int quadrant = i % 4;
    double x1 = (quadrant & 1) ? 1.0 : -1.0;
    double x2 = (quadrant & 2) ? 1.0 : -1.0;
    ds.x(i, 0) = x1;
    ds.x(i, 1) = x2;
    ds.y[i] = (x1 * x2 > 0) ? 1.0 : 0.0;
  }
  ds.feature_names = {"a", "b"};
  ds.column_kinds.assign(2, ColumnKind::Continuous);

  MlpModel m = train_mlp(ds, {8, 8}, 600, 16, 0.5, 3, Activation::Tanh);
  Eigen::VectorXd pred = mlp_predict_rows(m, ds.x);
  int correct = 0;
  for (int i = 0; i < 100; ++i)
    if ((pred[i] >= 0.5 ? 1.0 : 0.0) == ds.y[i]) ++correct;
  CHECK(correct == 100);
  CHECK(m.output_link == OutputLink::Sigmoid);
}

TEST_CASE("mlp_predict closed forms") {
  MlpModel net = hand_relu_net();
  Eigen::VectorXd three(1);
  three << 3.0;
  CHECK(mlp_predict(net, three) == doctest::Approx(7.0));  // 2*relu(3)+1

  Eigen::VectorXd neg(1);
  neg << -2.0;
  CHECK(mlp_predict(net, neg) == doctest::Approx(1.0));  // relu cuts off

  MlpModel zeros;
  zeros.activation = Activation::ReLU;
  zeros.output_link = OutputLink::Linear;
  zeros.weights = {Eigen::MatrixXd::Zero(4, 2), Eigen::MatrixXd::Zero(1, 4)};
  zeros.biases = {Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(1)};
  Eigen::VectorXd any(2);
  any << 13.0, -7.0;
  CHECK(mlp_predict(zeros, any) == 0.0);

  zeros.output_link = OutputLink::Sigmoid;
  CHECK(mlp_predict(zeros, any) == doctest::Approx(0.5));

  Eigen::VectorXd wrong(3);
  CHECK_THROWS_AS(mlp_predict(zeros, wrong), MlmError);
}

TEST_CASE("hidden_outputs matches the forward pass") {
  MlpModel net = hand_relu_net();
  Eigen::VectorXd three(1);
  three << 3.0;
  auto hidden = hidden_outputs(net, three);
  REQUIRE(hidden.size() == 1);
  CHECK(hidden[0][0] == doctest::Approx(3.0));

  Eigen::VectorXd neg(1);
  neg << -5.0;
  auto zeroed = hidden_outputs(net, neg);
  CHECK(zeroed[0][0] == 0.0);

  // z^(L) through the output layer reproduces mlp_predict
  MlpModel big = random_net({6, 5}, 3, OutputLink::Linear, 4);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd x(3);
    for (int j = 0; j < 3; ++j) x[j] = gauss(rng);
    auto zs = hidden_outputs(big, x);
    double manual = (big.weights.back() * zs.back())(0) + big.biases.back()[0];
    CHECK(manual == doctest::Approx(mlp_predict(big, x)).epsilon(1e-12));
  }
}

TEST_CASE("sigmoid-link outputs stay in (0,1)") {
  MlpModel net = random_net({8, 8}, 4, OutputLink::Sigmoid, 10);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 5.0);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd x(4);
    for (int j = 0; j < 4; ++j) x[j] = gauss(rng);
    double p = mlp_predict(net, x);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("learning rate zero leaves parameters bit-identical") {
  auto planted = synth::two_region_regression(64, 0.1, 6);
  MlpModel before = train_mlp(planted.data, {5}, 1, 16, 0.0, 13);
  MlpModel again = train_mlp(planted.data, {5}, 7, 16, 0.0, 13);
  for (size_t l = 0; l < before.weights.size(); ++l) {
    CHECK(before.weights[l] == again.weights[l]);
    CHECK(before.biases[l] == again.biases[l]);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto planted = synth::two_region_regression(128, 0.1, 9);
  MlpModel a = train_mlp(planted.data, {8, 8}, 5, 32, 0.05, 21);
  MlpModel b = train_mlp(planted.data, {8, 8}, 5, 32, 0.05, 21);
  for (size_t l = 0; l < a.weights.size(); ++l)
    CHECK(a.weights[l] == b.weights[l]);
  CHECK(a.train_loss == b.train_loss);
}

TEST_CASE("gradient check: random nets beat 1e-4") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    MlpModel net = random_net({16, 16}, 3,
                              rep % 2 ? OutputLink::Sigmoid : OutputLink::Linear,
                              100 + rep);
    Eigen::MatrixXd xs(12, 3);
    Eigen::VectorXd ys(12);
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 3; ++j) xs(i, j) = gauss(rng);
      ys[i] = rep % 2 ? static_cast<double>(i % 2) : gauss(rng);
    }
    CHECK(gradient_check(net, xs, ys, 1e-5) < 1e-4);
  }
  MlpModel net = random_net({4}, 2, OutputLink::Linear, 1);
  Eigen::MatrixXd xs(4, 2);
  xs.setRandom();
  Eigen::VectorXd ys(4);
  ys.setRandom();
  CHECK_THROWS_AS(gradient_check(net, xs, ys, 1e-2), MlmError);
}

TEST_CASE("gradient of a pure linear model matches least squares") {
  // zero hidden layers: model is g(Wx + b) with a linear link
  MlpModel lin;
  lin.activation = Activation::ReLU;
  lin.output_link = OutputLink::Linear;
  Eigen::MatrixXd w(1, 3);
  w << 0.5, -1.2, 2.0;
  lin.weights = {w};
  lin.biases = {Eigen::VectorXd::Constant(1, 0.3)};

  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd xs(20, 3);
  Eigen::VectorXd ys(20);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 3; ++j) xs(i, j) = gauss(rng);
    ys[i] = gauss(rng);
  }

  LossGrad lg = loss_and_gradient(lin, xs, ys);
  Eigen::VectorXd resid = (xs * w.transpose()).col(0).array() + 0.3 - ys.array();
  Eigen::VectorXd analytic_w = 2.0 / 20.0 * (xs.transpose() * resid);
  double analytic_b = 2.0 / 20.0 * resid.sum();
  for (int j = 0; j < 3; ++j)
    CHECK(lg.dw[0](0, j) == doctest::Approx(analytic_w[j]).epsilon(1e-10));
  CHECK(lg.db[0][0] == doctest::Approx(analytic_b).epsilon(1e-10));
}

TEST_CASE("non-finite parameters propagate through the gradient check") {
  MlpModel net = random_net({4}, 2, OutputLink::Linear, 3);
  net.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd xs(4, 2);
  xs.setRandom();
  Eigen::VectorXd ys(4);
  ys.setRandom();
  CHECK(std::isnan(gradient_check(net, xs, ys, 1e-5)));
}

TEST_CASE("diverging training raises DivergedLoss") {
  auto planted = synth::two_region_regression(64, 0.1, 12);
  CHECK_THROWS_AS(train_mlp(planted.data, {16, 16}, 50, 8, 50.0, 2), MlmError);
}
