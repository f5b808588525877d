#ifndef MLM_MLP_HPP
#define MLM_MLP_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mlm/dataset.hpp"

namespace mlm {

enum class Activation { ReLU, Tanh, Sigmoid };
enum class OutputLink { Linear, Sigmoid };

/// Feed-forward network with L hidden layers and a scalar output unit.
/// weights[l] has shape p_l x p_{l-1}; weights.back() is the output layer.
struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Activation activation = Activation::ReLU;
  OutputLink output_link = OutputLink::Linear;
  std::vector<double> train_loss;  // per-epoch full-data loss

  int hidden_layers() const { return static_cast<int>(weights.size()) - 1; }
  Eigen::Index input_dim() const {
    return weights.empty() ? 0 : weights.front().cols();
  }
  std::vector<int> hidden_widths() const {
    std::vector<int> w;
    for (int l = 0; l + 1 < static_cast<int>(weights.size()); ++l)
      w.push_back(static_cast<int>(weights[static_cast<size_t>(l)].rows()));
    return w;
  }
};

/// Mini-batch SGD on MSE (regression) or cross-entropy (classification).
/// Glorot-uniform initialization, zero biases; deterministic for a fixed
/// seed. A non-finite loss raises DivergedLoss.
MlpModel train_mlp(const Dataset& train, const std::vector<int>& widths,
                   int epochs, int batch_size, double learning_rate,
                   std::uint64_t seed,
                   Activation activation = Activation::ReLU);

double mlp_predict(const MlpModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd mlp_predict_rows(const MlpModel& model,
                                 const Eigen::MatrixXd& xs);

/// Post-activation outputs z^(1)..z^(L), exactly as used inside
/// mlp_predict.
std::vector<Eigen::VectorXd> hidden_outputs(const MlpModel& model,
                                            const Eigen::VectorXd& x);

/// Stacked z^(l) rows for a whole sample matrix (one matrix per layer).
std::vector<Eigen::MatrixXd> hidden_outputs_rows(const MlpModel& model,
                                                 const Eigen::MatrixXd& xs);

/// Full-batch loss and its gradient via backprop; exposed so the
/// finite-difference check exercises the exact training gradient.
struct LossGrad {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
};
LossGrad loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& xs,
                           const Eigen::VectorXd& ys);

/// Max relative error between backprop and central finite differences over
/// every parameter. Non-finite parameters propagate to a non-finite
/// result.
double gradient_check(const MlpModel& model, const Eigen::MatrixXd& xs,
                      const Eigen::VectorXd& ys, double h);

}  // namespace mlm

#endif  // MLM_MLP_HPP
