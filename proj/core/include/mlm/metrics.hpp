#ifndef MLM_METRICS_HPP
#define MLM_METRICS_HPP

#include <Eigen/Dense>

namespace mlm {

double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth);

/// Trapezoidal AUC over all score thresholds; tied scores are grouped.
/// Requires both classes present.
double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

/// F1 of predictions thresholded at 0.5 against 0/1 labels; 0 when there
/// are no true positives.
double f1_at_half(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

}  // namespace mlm

#endif  // MLM_METRICS_HPP
