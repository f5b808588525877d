#include "mlm/linmod.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

namespace mlm {

namespace {

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  double e = std::exp(a);
  return e / (1.0 + e);
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

void check_xy(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys) {
  if (xs.rows() != ys.size())
    throw MlmError(Err::DimensionMismatch, "xs rows != ys length");
  if (xs.rows() < 2)
    throw MlmError(Err::TooFewPoints, "linear fit needs at least 2 rows");
}

// Mean negative log-likelihood via softplus(a) - y*a; stable for large |a|.
double logistic_nll(const Eigen::VectorXd& eta, const Eigen::VectorXd& ys) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double a = eta[i];
    double softplus = std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a)));
    total += softplus - ys[i] * a;
  }
  return total / static_cast<double>(eta.size());
}

}  // namespace

LinearModel fit_ols(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys) {
  check_xy(xs, ys);
  const Eigen::Index n = xs.rows();
  const Eigen::Index p = xs.cols();

  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = xs;

  LinearModel model;
  model.task = Task::Regression;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  Eigen::VectorXd theta;
  if (qr.rank() == p + 1) {
    theta = qr.solve(ys);
    Eigen::VectorXd resid = ys - design * theta;
    long df = static_cast<long>(n) - static_cast<long>(p) - 1;
    model.residual_df = df;
    if (df >= 1) {
      double sigma2 = resid.squaredNorm() / static_cast<double>(df);
      Eigen::MatrixXd gram = design.transpose() * design;
      Eigen::MatrixXd cov =
          sigma2 * gram.ldlt().solve(
                       Eigen::MatrixXd::Identity(p + 1, p + 1));
      model.intercept_stderr = std::sqrt(std::max(0.0, cov(0, 0)));
      Eigen::VectorXd se(p);
      for (Eigen::Index j = 0; j < p; ++j)
        se[j] = std::sqrt(std::max(0.0, cov(j + 1, j + 1)));
      model.coef_stderr = se;
    }
  } else {
    // Tiny cells plus dummy columns make singular systems routine; a ridge
    // bump on the coefficient block keeps the solve well posed.
    Eigen::MatrixXd gram = design.transpose() * design;
    double lambda = 1e-8 * (gram.trace() - static_cast<double>(n)) /
                    std::max<double>(1.0, static_cast<double>(p));
    lambda = std::max(lambda, 1e-12);
    gram.diagonal().tail(p).array() += lambda;
    theta = gram.ldlt().solve(design.transpose() * ys);
    model.ridge_fallback = true;
    model.residual_df = 0;
  }

  model.intercept = theta[0];
  model.coefficients = theta.tail(p);
  return model;
}

LinearModel fit_lasso(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                      double alpha, int max_iter, double tol,
                      std::vector<double>* objective_history) {
  check_xy(xs, ys);
  if (alpha < 0)
    throw MlmError(Err::InvalidArgument, "lasso alpha must be >= 0");
  const Eigen::Index n = xs.rows();
  const Eigen::Index p = xs.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double intercept = ys.mean();
  Eigen::VectorXd resid = ys.array() - intercept;

  Eigen::VectorXd col_sq(p);
  for (Eigen::Index j = 0; j < p; ++j)
    col_sq[j] = xs.col(j).squaredNorm() * inv_n;

  LinearModel model;
  model.task = Task::Regression;
  model.lasso_alpha = alpha;
  model.converged = false;

  for (int iter = 0; iter < max_iter; ++iter) {
    double max_delta = 0.0;

    double mean_resid = resid.mean();
    if (mean_resid != 0.0) {
      intercept += mean_resid;
      resid.array() -= mean_resid;
      max_delta = std::max(max_delta, std::abs(mean_resid));
    }

    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq[j] == 0.0) continue;  // all-zero column stays at zero
      double rho = inv_n * xs.col(j).dot(resid) + col_sq[j] * beta[j];
      double updated = soft_threshold(rho, alpha) / col_sq[j];
      double delta = updated - beta[j];
      if (delta != 0.0) {
        resid -= xs.col(j) * delta;
        beta[j] = updated;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }

    if (objective_history) {
      double obj = 0.5 * inv_n * resid.squaredNorm() +
                   alpha * beta.cwiseAbs().sum();
      objective_history->push_back(obj);
    }
    if (max_delta < tol) {
      model.converged = true;
      break;
    }
  }

  model.intercept = intercept;
  model.coefficients = beta;
  return model;
}

LinearModel fit_logistic(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                         double alpha, int max_iter) {
  check_xy(xs, ys);
  if (alpha < 0)
    throw MlmError(Err::InvalidArgument, "logistic alpha must be >= 0");
  for (Eigen::Index i = 0; i < ys.size(); ++i)
    if (ys[i] != 0.0 && ys[i] != 1.0)
      throw MlmError(Err::InvalidArgument, "logistic targets must be 0/1");

  const Eigen::Index n = xs.rows();
  const Eigen::Index p = xs.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < n; ++i) (ys[i] == 1.0 ? has1 : has0) = true;
  if (alpha == 0.0 && !(has0 && has1))
    throw MlmError(Err::InvalidArgument,
                   "unpenalized logistic fit needs both classes present");

  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = xs;

  LinearModel model;
  model.task = Task::BinaryClassification;
  model.lasso_alpha = alpha;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);

  auto separation_check = [&](const Eigen::VectorXd& eta) {
    // Total separation: every margin correct and already saturated.
    for (Eigen::Index i = 0; i < n; ++i) {
      bool correct = (ys[i] == 1.0) ? (eta[i] > 0) : (eta[i] < 0);
      if (!correct || std::abs(eta[i]) < 30.0) return false;
    }
    return true;
  };

  if (alpha == 0.0) {
    model.converged = false;
    for (int iter = 0; iter < 100; ++iter) {
      Eigen::VectorXd eta = design * theta;
      Eigen::VectorXd prob(n), w(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        prob[i] = sigmoid(eta[i]);
        w[i] = prob[i] * (1.0 - prob[i]);
      }
      Eigen::VectorXd grad = design.transpose() * (prob - ys) * inv_n;
      Eigen::MatrixXd hess =
          design.transpose() * w.asDiagonal() * design * inv_n;
      hess.diagonal().array() += 1e-12;
      Eigen::VectorXd step = hess.ldlt().solve(grad);
      theta -= step;

      if (separation_check(design * theta) ||
          theta.cwiseAbs().maxCoeff() > 1e6)
        throw MlmError(Err::SeparableDegenerate,
                       "perfect separation; set alpha > 0");
      if (step.cwiseAbs().maxCoeff() < 1e-10) {
        model.converged = true;
        break;
      }
    }

    // Asymptotic standard errors from the observed information.
    Eigen::VectorXd eta = design * theta;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double pr = sigmoid(eta[i]);
      w[i] = pr * (1.0 - pr);
    }
    Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
    Eigen::MatrixXd cov =
        info.ldlt().solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
    model.intercept_stderr = std::sqrt(std::max(0.0, cov(0, 0)));
    Eigen::VectorXd se(p);
    for (Eigen::Index j = 0; j < p; ++j)
      se[j] = std::sqrt(std::max(0.0, cov(j + 1, j + 1)));
    model.coef_stderr = se;
    model.residual_df = static_cast<long>(n) - static_cast<long>(p) - 1;
  } else {
    // FISTA on the smooth part, soft-threshold prox on the coefficients.
    double lip;
    {
      // Power iteration for ||design||_2^2.
      Eigen::VectorXd v = Eigen::VectorXd::Ones(p + 1).normalized();
      double lambda_max = 1.0;
      for (int it = 0; it < 30; ++it) {
        Eigen::VectorXd u = design.transpose() * (design * v);
        lambda_max = u.norm();
        if (lambda_max == 0.0) break;
        v = u / lambda_max;
      }
      lip = std::max(lambda_max * inv_n / 4.0, 1e-12);
    }
    const double step = 1.0 / lip;

    Eigen::VectorXd z = theta;
    double t_momentum = 1.0;
    double prev_obj = std::numeric_limits<double>::infinity();
    model.converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
      Eigen::VectorXd eta = design * z;
      Eigen::VectorXd prob(n);
      for (Eigen::Index i = 0; i < n; ++i) prob[i] = sigmoid(eta[i]);
      Eigen::VectorXd grad = design.transpose() * (prob - ys) * inv_n;

      Eigen::VectorXd next = z - step * grad;
      for (Eigen::Index j = 1; j <= p; ++j)
        next[j] = soft_threshold(next[j], step * alpha);

      double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      Eigen::VectorXd momentum =
          next + ((t_momentum - 1.0) / t_next) * (next - theta);

      double max_delta = (next - theta).cwiseAbs().maxCoeff();
      theta = next;
      z = momentum;
      t_momentum = t_next;

      if ((iter & 63) == 0) {
        double obj = logistic_nll(design * theta, ys) +
                     alpha * theta.tail(p).cwiseAbs().sum();
        if (obj > prev_obj) {  // restart momentum on overshoot
          z = theta;
          t_momentum = 1.0;
        }
        prev_obj = obj;
      }
      if (max_delta < 1e-9) {
        model.converged = true;
        break;
      }
    }
  }

  model.intercept = theta[0];
  model.coefficients = theta.tail(p);
  return model;
}

double lm_predict(const LinearModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.coefficients.size())
    throw MlmError(Err::DimensionMismatch, "predict input length mismatch");
  double eta = model.intercept + model.coefficients.dot(x);
  return model.task == Task::BinaryClassification ? sigmoid(eta) : eta;
}

Eigen::VectorXd lm_predict_rows(const LinearModel& model,
                                const Eigen::MatrixXd& xs) {
  if (xs.cols() != model.coefficients.size())
    throw MlmError(Err::DimensionMismatch, "predict input width mismatch");
  Eigen::VectorXd eta =
      (xs * model.coefficients).array() + model.intercept;
  if (model.task == Task::BinaryClassification)
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
  return eta;
}

namespace {

double two_sided_quantile(Task task, long df, double level) {
  double q = 0.5 * (1.0 + level);
  if (task == Task::Regression && df >= 1) {
    boost::math::students_t dist(static_cast<double>(df));
    return boost::math::quantile(dist, q);
  }
  boost::math::normal dist;
  return boost::math::quantile(dist, q);
}

}  // namespace

ConfidenceIntervals confidence_intervals(const LinearModel& model,
                                         double level) {
  if (!(level > 0.0 && level < 1.0))
    throw MlmError(Err::InvalidArgument, "level must be in (0,1)");
  if (!model.coef_stderr)
    throw MlmError(Err::NoStderr, "model carries no standard errors");

  ConfidenceIntervals out;
  out.level = level;
  double quant = two_sided_quantile(model.task, model.residual_df, level);

  auto make = [&](double est, double se) {
    CoefInterval ci;
    ci.estimate = est;
    ci.stderr_value = se;
    ci.lo = est - quant * se;
    ci.hi = est + quant * se;
    return ci;
  };
  out.intercept = make(model.intercept, model.intercept_stderr.value_or(0.0));
  for (Eigen::Index j = 0; j < model.p(); ++j)
    out.coefficients.push_back(
        make(model.coefficients[j], (*model.coef_stderr)[j]));
  return out;
}

ConfidenceIntervals confidence_intervals(const LinearModel& model,
                                         double level,
                                         const Eigen::MatrixXd& xs,
                                         const Eigen::VectorXd& ys) {
  if (model.coef_stderr) return confidence_intervals(model, level);
  if (model.lasso_alpha <= 0.0)
    throw MlmError(Err::NoStderr, "unpenalized model without standard errors");

  // Refit unpenalized on the nonzero support; the refit provides standard
  // errors while the reported estimates stay the penalized ones
  // (post-selection caveat applies).
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < model.p(); ++j)
    if (model.coefficients[j] != 0.0) support.push_back(j);

  ConfidenceIntervals out;
  out.level = level;

  Eigen::MatrixXd sub(xs.rows(), static_cast<Eigen::Index>(support.size()));
  for (size_t c = 0; c < support.size(); ++c) sub.col(c) = xs.col(support[c]);

  LinearModel refit;
  if (support.empty()) {
    // Intercept-only refit.
    Eigen::MatrixXd empty(xs.rows(), 0);
    refit = model.task == Task::Regression
                ? fit_ols(empty, ys)
                : fit_logistic(empty, ys, 0.0);
  } else {
    refit = model.task == Task::Regression ? fit_ols(sub, ys)
                                           : fit_logistic(sub, ys, 0.0);
  }
  if (!refit.coef_stderr)
    throw MlmError(Err::NoStderr, "refit on support yields no standard errors");

  double quant = two_sided_quantile(model.task, refit.residual_df, level);
  auto make = [&](double est, double se) {
    CoefInterval ci;
    ci.estimate = est;
    ci.stderr_value = se;
    ci.lo = est - quant * se;
    ci.hi = est + quant * se;
    return ci;
  };
  out.intercept = make(model.intercept, refit.intercept_stderr.value_or(0.0));

  size_t pos = 0;
  for (Eigen::Index j = 0; j < model.p(); ++j) {
    if (pos < support.size() && support[pos] == j) {
      out.coefficients.push_back(
          make(model.coefficients[j], (*refit.coef_stderr)[pos]));
      ++pos;
    } else {
      CoefInterval ci;  // shrunk to zero by the penalty
      ci.shrunk_to_zero = true;
      out.coefficients.push_back(ci);
    }
  }
  return out;
}

}  // namespace mlm
