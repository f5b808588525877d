#ifndef MLM_LINMOD_HPP
#define MLM_LINMOD_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mlm/dataset.hpp"
#include "mlm/errors.hpp"

namespace mlm {

/// One local linear model: alpha + x'beta for regression, or
/// sigmoid(alpha + x'beta) for binary classification.
struct LinearModel {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  Task task = Task::Regression;
  double lasso_alpha = 0.0;

  // Standard errors are attached only by unpenalized fits (OLS and
  // alpha=0 logistic); penalized fits get them by refit-on-support at
  // confidence-interval time.
  std::optional<Eigen::VectorXd> coef_stderr;
  std::optional<double> intercept_stderr;
  long residual_df = 0;

  bool ridge_fallback = false;  // rank-deficient OLS solved with a ridge bump
  bool converged = true;        // iterative fits flag non-convergence here

  Eigen::Index p() const { return coefficients.size(); }
};

/// Ordinary least squares with intercept. Rank-deficient systems fall back
/// to a ridge-bumped normal-equation solve (flagged, no standard errors).
LinearModel fit_ols(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys);

/// LASSO by cyclic coordinate descent with soft thresholding, objective
///   (1/2n) * sum (y - a - x'b)^2 + alpha * sum |b_j|,
/// intercept unpenalized. Stops when no coefficient moves more than tol.
/// objective_history, when given, records the objective after each full
/// cycle.
LinearModel fit_lasso(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                      double alpha, int max_iter = 10000, double tol = 1e-8,
                      std::vector<double>* objective_history = nullptr);

/// Penalized logistic regression,
///   (1/n) * sum nll + alpha * sum |b_j|.
/// alpha = 0 uses Newton steps and attaches asymptotic standard errors;
/// alpha > 0 uses FISTA proximal gradient. Perfect separation with
/// alpha = 0 raises SeparableDegenerate.
LinearModel fit_logistic(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                         double alpha, int max_iter = 20000);

double lm_predict(const LinearModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd lm_predict_rows(const LinearModel& model,
                                const Eigen::MatrixXd& xs);

struct CoefInterval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double stderr_value = 0.0;
  bool shrunk_to_zero = false;
};

struct ConfidenceIntervals {
  double level = 0.95;
  CoefInterval intercept;
  std::vector<CoefInterval> coefficients;
};

/// Two-sided intervals at the given level from stored standard errors
/// (t-quantiles for regression, normal for classification). Raises
/// NoStderr when the model carries none.
ConfidenceIntervals confidence_intervals(const LinearModel& model,
                                         double level);

/// As above, but a penalized model without stored errors is refit
/// unpenalized on its nonzero support to obtain them; coefficients shrunk
/// to zero by the penalty are reported as exactly [0,0] and flagged.
ConfidenceIntervals confidence_intervals(const LinearModel& model,
                                         double level,
                                         const Eigen::MatrixXd& xs,
                                         const Eigen::VectorXd& ys);

}  // namespace mlm

#endif  // MLM_LINMOD_HPP
