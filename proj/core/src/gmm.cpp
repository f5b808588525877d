#include "mlm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mlm/rng.hpp"

namespace mlm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_sum_exp(const Eigen::VectorXd& v) {
  double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

// Lower Cholesky with a retry ladder of diagonal jitter.
bool cholesky_with_jitter(const Eigen::MatrixXd& cov, double base_jitter,
                          Eigen::MatrixXd* lower, double* log_det) {
  Eigen::MatrixXd work = cov;
  for (int attempt = 0; attempt < 3; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      *lower = llt.matrixL();
      double ld = 0.0;
      for (Eigen::Index i = 0; i < lower->rows(); ++i)
        ld += std::log((*lower)(i, i));
      *log_det = 2.0 * ld;
      return true;
    }
    work.diagonal().array() += base_jitter * std::pow(10.0, attempt);
  }
  return false;
}

struct ComponentStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;  // responsibility-weighted, already divided by Nk
  double weight = 0.0;      // Nk
};

}  // namespace

GmmEvaluator::GmmEvaluator(const Gmm& gmm) : gmm_(&gmm) {
  const int d = gmm.dim();
  chol_.resize(static_cast<size_t>(gmm.k));
  log_norm_.resize(static_cast<size_t>(gmm.k));
  for (int c = 0; c < gmm.k; ++c) {
    double log_det;
    if (!cholesky_with_jitter(gmm.covariances[static_cast<size_t>(c)], 1e-10,
                              &chol_[static_cast<size_t>(c)], &log_det))
      throw MlmError(Err::DegenerateComponent,
                     "covariance of component " + std::to_string(c) +
                         " is not positive definite");
    log_norm_[static_cast<size_t>(c)] = -0.5 * (d * kLog2Pi + log_det);
  }
}

Eigen::VectorXd GmmEvaluator::weighted_log_densities(
    const Eigen::VectorXd& x) const {
  if (x.size() != gmm_->dim())
    throw MlmError(Err::DimensionMismatch, "gmm input length mismatch");
  Eigen::VectorXd out(gmm_->k);
  for (int c = 0; c < gmm_->k; ++c) {
    const auto& L = chol_[static_cast<size_t>(c)];
    Eigen::VectorXd diff = x - gmm_->means[static_cast<size_t>(c)];
    Eigen::VectorXd solved =
        L.triangularView<Eigen::Lower>().solve(diff);
    double quad = solved.squaredNorm();
    double prior = gmm_->priors[c];
    double log_prior =
        prior > 0 ? std::log(prior) : -std::numeric_limits<double>::infinity();
    out[c] = log_prior + log_norm_[static_cast<size_t>(c)] - 0.5 * quad;
  }
  return out;
}

double GmmEvaluator::log_density(const Eigen::VectorXd& x) const {
  return log_sum_exp(weighted_log_densities(x));
}

int GmmEvaluator::map_assign(const Eigen::VectorXd& x) const {
  Eigen::VectorXd wld = weighted_log_densities(x);
  int best = 0;
  for (int c = 1; c < gmm_->k; ++c)
    if (wld[c] > wld[best]) best = c;  // ties keep the lowest index
  return best;
}

int map_assign(const Gmm& gmm, const Eigen::VectorXd& x) {
  return GmmEvaluator(gmm).map_assign(x);
}

double log_density(const Gmm& gmm, const Eigen::VectorXd& x) {
  return GmmEvaluator(gmm).log_density(x);
}

Eigen::VectorXd posterior(const Gmm& gmm, const Eigen::VectorXd& x) {
  Eigen::VectorXd wld = GmmEvaluator(gmm).weighted_log_densities(x);
  double lse = log_sum_exp(wld);
  Eigen::VectorXd post(gmm.k);
  for (int c = 0; c < gmm.k; ++c) post[c] = std::exp(wld[c] - lse);
  return post;
}

Gmm marginal(const Gmm& gmm, const std::vector<int>& dims) {
  if (dims.empty())
    throw MlmError(Err::EmptySubset, "marginal over empty subset");
  const int d = gmm.dim();
  std::vector<bool> seen(static_cast<size_t>(d), false);
  for (int idx : dims) {
    if (idx < 0 || idx >= d)
      throw MlmError(Err::IndexOutOfRange,
                     "marginal index " + std::to_string(idx) + " out of range");
    if (seen[static_cast<size_t>(idx)])
      throw MlmError(Err::InvalidArgument, "duplicate marginal index");
    seen[static_cast<size_t>(idx)] = true;
  }

  Gmm out;
  out.k = gmm.k;
  out.priors = gmm.priors;
  out.cov_kind = gmm.cov_kind;
  out.degenerate_flagged = gmm.degenerate_flagged;
  const auto s = static_cast<Eigen::Index>(dims.size());
  for (int c = 0; c < gmm.k; ++c) {
    Eigen::VectorXd mu(s);
    Eigen::MatrixXd cov(s, s);
    for (Eigen::Index a = 0; a < s; ++a) {
      mu[a] = gmm.means[static_cast<size_t>(c)][dims[static_cast<size_t>(a)]];
      for (Eigen::Index b = 0; b < s; ++b)
        cov(a, b) = gmm.covariances[static_cast<size_t>(c)](
            dims[static_cast<size_t>(a)], dims[static_cast<size_t>(b)]);
    }
    out.means.push_back(std::move(mu));
    out.covariances.push_back(std::move(cov));
  }
  return out;
}

namespace {

// k-means++ seeding followed by a hard assignment.
std::vector<int> seed_assignments(const Eigen::MatrixXd& points, int k,
                                  Rng& rng) {
  const Eigen::Index m = points.rows();
  std::vector<Eigen::Index> centers;
  std::uniform_int_distribution<Eigen::Index> first(0, m - 1);
  centers.push_back(first(rng));

  Eigen::VectorXd dist2 =
      (points.rowwise() - points.row(centers[0])).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    double total = dist2.sum();
    Eigen::Index chosen;
    if (total <= 0.0) {
      std::uniform_int_distribution<Eigen::Index> any(0, m - 1);
      chosen = any(rng);
    } else {
      std::uniform_real_distribution<double> unif(0.0, total);
      double r = unif(rng);
      double acc = 0.0;
      chosen = m - 1;
      for (Eigen::Index i = 0; i < m; ++i) {
        acc += dist2[i];
        if (acc >= r) {
          chosen = i;
          break;
        }
      }
    }
    centers.push_back(chosen);
    Eigen::VectorXd nd =
        (points.rowwise() - points.row(chosen)).rowwise().squaredNorm();
    dist2 = dist2.cwiseMin(nd);
  }

  std::vector<int> assign(static_cast<size_t>(m), 0);
  for (Eigen::Index i = 0; i < m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (int c = 0; c < k; ++c) {
      double d2 = (points.row(i) - points.row(centers[static_cast<size_t>(c)]))
                      .squaredNorm();
      if (d2 < best) {
        best = d2;
        best_c = c;
      }
    }
    assign[static_cast<size_t>(i)] = best_c;
  }
  return assign;
}

void m_step(const Eigen::MatrixXd& points, const Eigen::MatrixXd& resp,
            CovKind kind, double reg, Gmm* gmm) {
  const Eigen::Index m = points.rows();
  const Eigen::Index d = points.cols();
  const int k = gmm->k;

  Eigen::VectorXd nk = resp.colwise().sum();
  gmm->priors = nk / static_cast<double>(m);

  bool floored = false;
  std::vector<Eigen::MatrixXd> scatters(static_cast<size_t>(k));
  for (int c = 0; c < k; ++c) {
    double w = std::max(nk[c], 1e-300);
    Eigen::VectorXd mu = (resp.col(c).transpose() * points).transpose() / w;
    Eigen::MatrixXd centered = points.rowwise() - mu.transpose();
    Eigen::MatrixXd scatter =
        centered.transpose() * (resp.col(c).asDiagonal() * centered) / w;
    gmm->means[static_cast<size_t>(c)] = mu;
    scatters[static_cast<size_t>(c)] = scatter;
    if (scatter.trace() / static_cast<double>(d) < reg) floored = true;
  }

  switch (kind) {
    case CovKind::Full:
      for (int c = 0; c < k; ++c) {
        Eigen::MatrixXd cov = scatters[static_cast<size_t>(c)];
        cov.diagonal().array() += reg;
        gmm->covariances[static_cast<size_t>(c)] = cov;
      }
      break;
    case CovKind::Diagonal:
      for (int c = 0; c < k; ++c) {
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
        cov.diagonal() =
            scatters[static_cast<size_t>(c)].diagonal().array() + reg;
        gmm->covariances[static_cast<size_t>(c)] = cov;
      }
      break;
    case CovKind::Spherical:
      for (int c = 0; c < k; ++c) {
        double var = scatters[static_cast<size_t>(c)].trace() /
                         static_cast<double>(d) +
                     reg;
        gmm->covariances[static_cast<size_t>(c)] =
            var * Eigen::MatrixXd::Identity(d, d);
      }
      break;
    case CovKind::Pooled: {
      Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
      for (int c = 0; c < k; ++c)
        pooled += scatters[static_cast<size_t>(c)] * nk[c];
      pooled /= static_cast<double>(m);
      pooled.diagonal().array() += reg;
      for (int c = 0; c < k; ++c)
        gmm->covariances[static_cast<size_t>(c)] = pooled;
      break;
    }
  }
  if (floored) gmm->degenerate_flagged = true;
}

}  // namespace

Gmm fit_gmm(const Eigen::MatrixXd& points, int k, CovKind cov_kind,
            std::uint64_t seed, int max_iter, double tol,
            std::vector<double>* ll_history) {
  const Eigen::Index m = points.rows();
  const Eigen::Index d = points.cols();
  if (k < 1) throw MlmError(Err::InvalidArgument, "k must be >= 1");
  if (d < 1) throw MlmError(Err::InvalidArgument, "dimension must be >= 1");
  if (m < k)
    throw MlmError(Err::TooFewPoints, "need at least k points, got " +
                                          std::to_string(m));

  double mean_var = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double mu = points.col(j).mean();
    mean_var += (points.col(j).array() - mu).square().sum() /
                static_cast<double>(m);
  }
  mean_var /= static_cast<double>(d);
  const double reg = std::max(1e-6 * mean_var, 1e-12);

  Gmm gmm;
  gmm.k = k;
  gmm.cov_kind = cov_kind;
  gmm.priors = Eigen::VectorXd::Constant(k, 1.0 / k);
  gmm.means.assign(static_cast<size_t>(k), Eigen::VectorXd::Zero(d));
  gmm.covariances.assign(static_cast<size_t>(k),
                         Eigen::MatrixXd::Identity(d, d));

  Rng rng = make_rng(seed);
  std::vector<int> hard = seed_assignments(points, k, rng);
  // Coincident seeds can leave hard clusters empty; donate a point from
  // the largest cluster so every component starts occupied.
  {
    std::vector<int> counts(static_cast<size_t>(k), 0);
    for (int a : hard) ++counts[static_cast<size_t>(a)];
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<size_t>(c)] > 0) continue;
      int donor =
          static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                           counts.begin());
      for (Eigen::Index i = 0; i < m; ++i) {
        if (hard[static_cast<size_t>(i)] == donor) {
          hard[static_cast<size_t>(i)] = c;
          --counts[static_cast<size_t>(donor)];
          ++counts[static_cast<size_t>(c)];
          break;
        }
      }
    }
  }
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(m, k);
  for (Eigen::Index i = 0; i < m; ++i)
    resp(i, hard[static_cast<size_t>(i)]) = 1.0;
  m_step(points, resp, cov_kind, reg, &gmm);

  double prev_ll = -std::numeric_limits<double>::infinity();
  int reinit_budget = 3 * k;

  for (int iter = 0; iter < max_iter; ++iter) {
    // E-step.
    GmmEvaluator eval(gmm);
    Eigen::MatrixXd log_resp(m, k);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::VectorXd wld = eval.weighted_log_densities(points.row(i));
      double lse = log_sum_exp(wld);
      ll += lse;
      for (int c = 0; c < k; ++c) log_resp(i, c) = wld[c] - lse;
    }
    resp = log_resp.array().exp();

    // Re-seed any component whose mass vanished at the point the mixture
    // covers worst.
    Eigen::VectorXd nk = resp.colwise().sum();
    bool reseeded = false;
    for (int c = 0; c < k && reinit_budget > 0; ++c) {
      if (nk[c] < 1e-10 * static_cast<double>(m)) {
        Eigen::Index worst = 0;
        double worst_cover = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < m; ++i) {
          double cover = resp.row(i).maxCoeff();
          if (cover < worst_cover) {
            worst_cover = cover;
            worst = i;
          }
        }
        gmm.means[static_cast<size_t>(c)] = points.row(worst).transpose();
        gmm.covariances[static_cast<size_t>(c)] =
            (mean_var + reg) * Eigen::MatrixXd::Identity(d, d);
        gmm.priors[c] = 1.0 / static_cast<double>(m);
        gmm.priors /= gmm.priors.sum();
        --reinit_budget;
        reseeded = true;
      }
    }
    if (reseeded) {
      gmm.degenerate_flagged = true;
      continue;  // fresh E-step with the repaired parameters
    }
    if (nk.minCoeff() < 1e-10 * static_cast<double>(m))
      throw MlmError(Err::DegenerateComponent,
                     "component mass vanished repeatedly; k too large");

    if (ll_history) ll_history->push_back(ll);
    gmm.log_likelihood = ll;
    if (std::isfinite(prev_ll) && ll - prev_ll < tol) break;
    prev_ll = ll;

    m_step(points, resp, cov_kind, reg, &gmm);
  }

  return gmm;
}

}  // namespace mlm
