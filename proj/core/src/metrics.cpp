#include "mlm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mlm/errors.hpp"

namespace mlm {

double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth) {
  if (predictions.size() != truth.size())
    throw MlmError(Err::DimensionMismatch, "rmse input size mismatch");
  if (predictions.size() == 0)
    throw MlmError(Err::InvalidArgument, "rmse of empty vectors");
  return std::sqrt((predictions - truth).squaredNorm() /
                   static_cast<double>(predictions.size()));
}

double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  if (scores.size() != labels.size())
    throw MlmError(Err::DimensionMismatch, "auc input size mismatch");
  const Eigen::Index n = scores.size();
  double pos = 0, neg = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] == 1.0) ++pos;
    else if (labels[i] == 0.0) ++neg;
    else throw MlmError(Err::InvalidArgument, "labels must be 0/1");
  }
  if (pos == 0 || neg == 0)
    throw MlmError(Err::InvalidArgument, "auc needs both classes present");

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return scores[a] > scores[b];
  });

  // Sweep thresholds downward; points with tied scores move together,
  // which traces the tie-handling diagonal segments of the ROC curve.
  double area = 0.0;
  double tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    double tp_gain = 0, fp_gain = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1.0) ++tp_gain;
      else ++fp_gain;
      ++j;
    }
    area += fp_gain * (tp + tp + tp_gain) / 2.0;
    tp += tp_gain;
    fp += fp_gain;
    i = j;
  }
  return area / (pos * neg);
}

double f1_at_half(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  if (scores.size() != labels.size())
    throw MlmError(Err::DimensionMismatch, "f1 input size mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    bool pred = scores[i] >= 0.5;
    bool truth = labels[i] == 1.0;
    if (pred && truth) ++tp;
    else if (pred && !truth) ++fp;
    else if (!pred && truth) ++fn;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) /
         (2.0 * static_cast<double>(tp) + static_cast<double>(fp) +
          static_cast<double>(fn));
}

}  // namespace mlm
