#include "mlm/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlm/errors.hpp"
#include "mlm/rng.hpp"

namespace mlm {

namespace {

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  double e = std::exp(a);
  return e / (1.0 + e);
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& a, Activation act) {
  switch (act) {
    case Activation::ReLU:
      return a.cwiseMax(0.0);
    case Activation::Tanh:
      return a.array().tanh().matrix();
    case Activation::Sigmoid:
      return a.unaryExpr([](double v) { return sigmoid(v); });
  }
  return a;
}

// Derivative expressed through the activation value; ReLU subgradient at 0
// is taken as 0.
Eigen::MatrixXd activate_grad(const Eigen::MatrixXd& pre,
                              const Eigen::MatrixXd& post, Activation act) {
  switch (act) {
    case Activation::ReLU:
      return pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::Tanh:
      return (1.0 - post.array().square()).matrix();
    case Activation::Sigmoid:
      return (post.array() * (1.0 - post.array())).matrix();
  }
  return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
}

struct Forward {
  std::vector<Eigen::MatrixXd> pre;   // per hidden layer
  std::vector<Eigen::MatrixXd> post;  // z^(l)
  Eigen::VectorXd output_pre;         // pre-link output
  Eigen::VectorXd output;
};

Forward forward_pass(const MlpModel& model, const Eigen::MatrixXd& xs) {
  Forward f;
  const int hidden = model.hidden_layers();
  Eigen::MatrixXd z = xs;
  for (int l = 0; l < hidden; ++l) {
    const auto& w = model.weights[static_cast<size_t>(l)];
    const auto& b = model.biases[static_cast<size_t>(l)];
    Eigen::MatrixXd pre = (z * w.transpose()).rowwise() + b.transpose();
    Eigen::MatrixXd post = activate(pre, model.activation);
    f.pre.push_back(std::move(pre));
    f.post.push_back(post);
    z = std::move(post);
  }
  const auto& wo = model.weights.back();
  const auto& bo = model.biases.back();
  f.output_pre = (z * wo.transpose()).col(0).array() + bo[0];
  if (model.output_link == OutputLink::Sigmoid)
    f.output = f.output_pre.unaryExpr([](double v) { return sigmoid(v); });
  else
    f.output = f.output_pre;
  return f;
}

double batch_loss(const MlpModel& model, const Forward& f,
                  const Eigen::VectorXd& ys) {
  const auto n = static_cast<double>(ys.size());
  if (model.output_link == OutputLink::Linear)
    return (ys - f.output).squaredNorm() / n;
  // Cross-entropy via softplus(a) - y*a for numerical stability.
  double total = 0.0;
  for (Eigen::Index i = 0; i < ys.size(); ++i) {
    double a = f.output_pre[i];
    total += std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))) -
             ys[i] * a;
  }
  return total / n;
}

void check_input(const MlpModel& model, Eigen::Index cols) {
  if (model.weights.empty())
    throw MlmError(Err::InvalidArgument, "model has no layers");
  if (cols != model.input_dim())
    throw MlmError(Err::DimensionMismatch,
                   "input has " + std::to_string(cols) + " features, model expects " +
                       std::to_string(model.input_dim()));
}

}  // namespace

MlpModel train_mlp(const Dataset& train, const std::vector<int>& widths,
                   int epochs, int batch_size, double learning_rate,
                   std::uint64_t seed, Activation activation) {
  if (widths.empty())
    throw MlmError(Err::InvalidArgument, "widths must be non-empty");
  for (int w : widths)
    if (w < 1) throw MlmError(Err::InvalidArgument, "layer width must be >= 1");
  if (epochs < 1)
    throw MlmError(Err::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1)
    throw MlmError(Err::InvalidArgument, "batch_size must be >= 1");
  if (learning_rate < 0)
    throw MlmError(Err::InvalidArgument, "learning_rate must be >= 0");
  if (train.n() < 1) throw MlmError(Err::TooFewPoints, "empty training set");

  const Eigen::Index n = train.n();
  const Eigen::Index p = train.p();

  MlpModel model;
  model.activation = activation;
  model.output_link = train.task == Task::BinaryClassification
                          ? OutputLink::Sigmoid
                          : OutputLink::Linear;

  Rng rng = make_rng(seed);
  std::vector<Eigen::Index> dims;
  dims.push_back(p);
  for (int w : widths) dims.push_back(w);
  dims.push_back(1);
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::Index fan_in = dims[l];
    Eigen::Index fan_out = dims[l + 1];
    double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> unif(-a, a);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = unif(rng);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch_size) {
      Eigen::Index len = std::min<Eigen::Index>(batch_size, n - start);
      Eigen::MatrixXd xb(len, p);
      Eigen::VectorXd yb(len);
      for (Eigen::Index i = 0; i < len; ++i) {
        xb.row(i) = train.x.row(order[static_cast<size_t>(start + i)]);
        yb[i] = train.y[order[static_cast<size_t>(start + i)]];
      }
      LossGrad lg = loss_and_gradient(model, xb, yb);
      if (!std::isfinite(lg.loss))
        throw MlmError(Err::DivergedLoss,
                       "non-finite loss at epoch " + std::to_string(epoch + 1) +
                           "; lower the learning rate");
      for (size_t l = 0; l < model.weights.size(); ++l) {
        model.weights[l] -= learning_rate * lg.dw[l];
        model.biases[l] -= learning_rate * lg.db[l];
      }
    }
    Forward f = forward_pass(model, train.x);
    double full = batch_loss(model, f, train.y);
    if (!std::isfinite(full))
      throw MlmError(Err::DivergedLoss,
                     "non-finite loss after epoch " + std::to_string(epoch + 1));
    model.train_loss.push_back(full);
  }
  return model;
}

LossGrad loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& xs,
                           const Eigen::VectorXd& ys) {
  check_input(model, xs.cols());
  if (xs.rows() != ys.size())
    throw MlmError(Err::DimensionMismatch, "xs rows != ys length");
  const auto n = static_cast<double>(xs.rows());
  const int hidden = model.hidden_layers();

  Forward f = forward_pass(model, xs);

  LossGrad lg;
  lg.loss = batch_loss(model, f, ys);
  lg.dw.resize(model.weights.size());
  lg.db.resize(model.biases.size());

  // dL/d(output_pre): MSE -> 2(out-y)/n; sigmoid+CE -> (p-y)/n.
  Eigen::VectorXd delta_out =
      model.output_link == OutputLink::Linear
          ? Eigen::VectorXd(2.0 / n * (f.output - ys))
          : Eigen::VectorXd(1.0 / n * (f.output - ys));

  const Eigen::MatrixXd& last_hidden =
      hidden > 0 ? f.post.back() : xs;
  lg.dw.back() = delta_out.transpose() * last_hidden;
  lg.db.back() = Eigen::VectorXd::Constant(1, delta_out.sum());

  Eigen::MatrixXd delta = delta_out * model.weights.back();  // n x p_L
  for (int l = hidden - 1; l >= 0; --l) {
    delta = delta.cwiseProduct(activate_grad(
        f.pre[static_cast<size_t>(l)], f.post[static_cast<size_t>(l)],
        model.activation));
    const Eigen::MatrixXd& below =
        l > 0 ? f.post[static_cast<size_t>(l - 1)] : xs;
    lg.dw[static_cast<size_t>(l)] = delta.transpose() * below;
    lg.db[static_cast<size_t>(l)] = delta.colwise().sum().transpose();
    if (l > 0) delta = delta * model.weights[static_cast<size_t>(l)];
  }
  return lg;
}

double mlp_predict(const MlpModel& model, const Eigen::VectorXd& x) {
  check_input(model, x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]))
      throw MlmError(Err::InvalidArgument, "non-finite input");
  Forward f = forward_pass(model, x.transpose());
  return f.output[0];
}

Eigen::VectorXd mlp_predict_rows(const MlpModel& model,
                                 const Eigen::MatrixXd& xs) {
  check_input(model, xs.cols());
  return forward_pass(model, xs).output;
}

std::vector<Eigen::VectorXd> hidden_outputs(const MlpModel& model,
                                            const Eigen::VectorXd& x) {
  check_input(model, x.size());
  Forward f = forward_pass(model, x.transpose());
  std::vector<Eigen::VectorXd> out;
  for (const auto& z : f.post) out.push_back(z.row(0).transpose());
  return out;
}

std::vector<Eigen::MatrixXd> hidden_outputs_rows(const MlpModel& model,
                                                 const Eigen::MatrixXd& xs) {
  check_input(model, xs.cols());
  Forward f = forward_pass(model, xs);
  return f.post;
}

double gradient_check(const MlpModel& model, const Eigen::MatrixXd& xs,
                      const Eigen::VectorXd& ys, double h) {
  if (!(h > 1e-8 && h < 1e-3))
    throw MlmError(Err::InvalidArgument, "h must lie in (1e-8, 1e-3)");

  LossGrad lg = loss_and_gradient(model, xs, ys);
  MlpModel work = model;

  double max_rel = 0.0;
  auto update = [&](double analytic, double* param) {
    double saved = *param;
    *param = saved + h;
    double up = loss_and_gradient(work, xs, ys).loss;
    *param = saved - h;
    double down = loss_and_gradient(work, xs, ys).loss;
    *param = saved;
    double fd = (up - down) / (2.0 * h);
    double rel = std::abs(analytic - fd) /
                 std::max({1e-8, std::abs(analytic), std::abs(fd)});
    if (std::isnan(rel) || rel > max_rel) max_rel = rel;
  };

  for (size_t l = 0; l < work.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < work.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < work.weights[l].cols(); ++c)
        update(lg.dw[l](r, c), &work.weights[l](r, c));
    for (Eigen::Index r = 0; r < work.biases[l].size(); ++r)
      update(lg.db[l][r], &work.biases[l][r]);
  }
  return max_rel;
}

}  // namespace mlm
