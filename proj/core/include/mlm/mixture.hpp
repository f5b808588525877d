#ifndef MLM_MIXTURE_HPP
#define MLM_MIXTURE_HPP

#include <Eigen/Dense>
#include <vector>

#include "mlm/dataset.hpp"
#include "mlm/gmm.hpp"
#include "mlm/linmod.hpp"
#include "mlm/partition.hpp"

namespace mlm {

/// Density of X within one EPIC: the mixture of its member cells' single
/// Gaussians, weights renormalized within the EPIC.
using EpicDensity = Gmm;

struct Epic {
  LinearModel local_model;
  EpicDensity density;
  double prior = 0.0;              // pi~_j
  std::vector<int> member_cells;   // J_j, sorted
  int size = 0;                    // training samples
};

/// The deployable mixture-of-linear-models predictor.
struct MlmModel {
  std::vector<Epic> epics;               // sorted by size desc
  Scaler scaler;
  Task task = Task::Regression;
  Eigen::VectorXi train_epic_labels;     // zeta_i, 0-based epic ids
  double lasso_alpha = 0.0;
  CovKind density_cov_kind = CovKind::Full;

  int epic_count() const { return static_cast<int>(epics.size()); }
};

/// Mutual prediction disparity: mean squared disagreement of the two
/// models over both cells' combined samples.
double cell_distance_regression(const LinearModel& ms, const LinearModel& mt,
                                const CoSupervisedSet& samples_s,
                                const CoSupervisedSet& samples_t);

/// Classification distance (fp+fn)/(2*tp) with both models thresholded at
/// 0.5 over the union of both cells' combined samples; tp = 0 yields
/// +infinity.
double cell_distance_classification(const LinearModel& ms,
                                    const LinearModel& mt,
                                    const CoSupervisedSet& samples_s,
                                    const CoSupervisedSet& samples_t);

/// Pairwise distance matrix with the task-appropriate cell distance.
Eigen::MatrixXd cell_distance_matrix(
    const std::vector<LinearModel>& models,
    const std::vector<CoSupervisedSet>& cosets, Task task);

struct WardStep {
  int a = 0;          // merged cluster ids (initial cells are 0..K-1,
  int b = 0;          // merged clusters continue at K, K+1, ...)
  double height = 0.0;
};

/// Agglomerative merge sequence by Ward's method, run with the
/// Lance-Williams recurrence directly on the given distance matrix.
/// Infinite entries are replaced by 10x the largest finite distance so
/// degenerate pairs merge last. Ties break toward the lowest pair indices.
std::vector<WardStep> ward_linkage(const Eigen::MatrixXd& distances);

/// Cell -> cluster membership after cutting the linkage at J clusters.
/// Clusters are numbered by their lowest member cell.
std::vector<int> cut_linkage(const std::vector<WardStep>& steps, int cells,
                             int j_clusters);

/// Convenience: distance matrix -> Ward -> cut.
std::vector<int> merge_cells(const Eigen::MatrixXd& distances, int j_clusters);

/// Builds the MLM: per EPIC, refit a local model on the pooled combined
/// samples of its member cells; per cell, a single Gaussian over the
/// original members (empirical prior, sample mean, covariance per
/// cov_kind with Pooled estimated across all cells).
MlmModel build_mlm(const Dataset& train_std, const CellPartition& partition,
                   const std::vector<CoSupervisedSet>& cosets,
                   const std::vector<int>& membership, const Scaler& scaler,
                   double lasso_alpha, CovKind cov_kind);

/// gamma_j(x) for standardized x, computed in log space.
Eigen::VectorXd epic_posteriors(const MlmModel& model,
                                const Eigen::VectorXd& x_std);

/// Soft-weighted prediction sum_j gamma_j(x) m_j(x); x in original
/// (unstandardized) units.
double predict_soft(const MlmModel& model, const Eigen::VectorXd& x_raw);

/// Prediction of the MAP EPIC's local model; ties to the lowest index.
double predict_hard(const MlmModel& model, const Eigen::VectorXd& x_raw);

Eigen::VectorXd predict_soft_rows(const MlmModel& model,
                                  const Eigen::MatrixXd& xs_raw);
Eigen::VectorXd predict_hard_rows(const MlmModel& model,
                                  const Eigen::MatrixXd& xs_raw);

/// Per-row gamma matrix (n x J).
Eigen::MatrixXd epic_posteriors_rows(const MlmModel& model,
                                     const Eigen::MatrixXd& xs_raw);

}  // namespace mlm

#endif  // MLM_MIXTURE_HPP
