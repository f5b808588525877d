#ifndef MLM_GMM_HPP
#define MLM_GMM_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mlm/errors.hpp"

namespace mlm {

enum class CovKind { Full, Diagonal, Spherical, Pooled };

struct Gmm {
  int k = 0;
  Eigen::VectorXd priors;                  // sum to 1
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;  // SPD after regularization
  CovKind cov_kind = CovKind::Full;
  double log_likelihood = 0.0;
  bool degenerate_flagged = false;  // some component sat on the reg floor

  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
};

/// EM fit from a k-means++ style seeded start (one hard-assignment M-step
/// before EM proper). Log-likelihood is non-decreasing across iterations;
/// a covariance floor of 1e-6 * mean data variance is added to diagonals
/// every M-step. Empty components are re-seeded at the worst-covered point.
Gmm fit_gmm(const Eigen::MatrixXd& points, int k, CovKind cov_kind,
            std::uint64_t seed, int max_iter = 200, double tol = 1e-7,
            std::vector<double>* ll_history = nullptr);

/// argmax_k of log prior_k + log phi(x | mu_k, Sigma_k); ties to the
/// lowest index.
int map_assign(const Gmm& gmm, const Eigen::VectorXd& x);

/// log sum_k prior_k phi(x | mu_k, Sigma_k), evaluated by log-sum-exp.
double log_density(const Gmm& gmm, const Eigen::VectorXd& x);

/// Posterior responsibilities p(component | x); sums to 1.
Eigen::VectorXd posterior(const Gmm& gmm, const Eigen::VectorXd& x);

/// Component-wise marginal onto the given coordinate subset; priors are
/// unchanged and the covariance kind is preserved.
Gmm marginal(const Gmm& gmm, const std::vector<int>& dims);

/// Caches Cholesky factors so that many evaluations against one mixture
/// stay cheap.
class GmmEvaluator {
 public:
  explicit GmmEvaluator(const Gmm& gmm);

  // log prior_k + log phi_k(x), per component.
  Eigen::VectorXd weighted_log_densities(const Eigen::VectorXd& x) const;
  double log_density(const Eigen::VectorXd& x) const;
  int map_assign(const Eigen::VectorXd& x) const;

 private:
  const Gmm* gmm_;
  std::vector<Eigen::MatrixXd> chol_;      // lower factors
  std::vector<double> log_norm_;           // -d/2 log(2pi) - 1/2 log|Sigma|
};

}  // namespace mlm

#endif  // MLM_GMM_HPP
