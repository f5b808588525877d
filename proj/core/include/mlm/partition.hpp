#ifndef MLM_PARTITION_HPP
#define MLM_PARTITION_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mlm/dataset.hpp"
#include "mlm/gmm.hpp"
#include "mlm/mlp.hpp"

namespace mlm {

/// Per-layer GMMs over hidden activations (the layer l-cells).
struct LayerClusterings {
  std::vector<Gmm> per_layer;
  std::vector<int> k_per_layer;
};

/// Cells: samples grouped by their full sequence of per-layer MAP labels,
/// compact ids assigned in lexicographic sequence order.
struct CellPartition {
  Eigen::VectorXi cell_of_sample;              // compact ids, 0-based
  std::vector<std::vector<int>> sequence_of_cell;  // id -> (k_1..k_L)
  std::vector<int> cell_counts;                // n_k
  std::uint64_t total_sequences = 0;           // prod K_l

  int cell_count() const { return static_cast<int>(sequence_of_cell.size()); }
};

/// Original and simulated points of one cell, originals first.
struct CoSupervisedSet {
  int cell = 0;
  Eigen::MatrixXd x;  // (n_k + m) x p
  Eigen::VectorXd y;
  Eigen::Index n_original = 0;

  Eigen::Index total() const { return x.rows(); }
  auto original_x() const { return x.topRows(n_original); }
  auto simulated_x() const { return x.bottomRows(x.rows() - n_original); }
};

/// Fits one Full-covariance GMM per hidden layer over the observed
/// activations; layer l gets K_l components and a seed derived from
/// (seed, l).
LayerClusterings layer_cells(const MlpModel& model, const Dataset& train,
                             const std::vector<int>& k_per_layer,
                             std::uint64_t seed);

/// MAP-assigns every sample at every layer, orders the label sequences
/// lexicographically, and numbers only the occupied ones.
CellPartition assign_cells(const LayerClusterings& layers,
                           const MlpModel& model, const Dataset& data);

/// Mixed-radix lexicographic rank of a label sequence (first label most
/// significant).
std::uint64_t lexicographic_rank(const std::vector<int>& sequence,
                                 const std::vector<int>& k_per_layer);

/// Draws m points from N(cell mean, epsilon*I) and labels them with the
/// network; for classification the label is 1 when the class-1 probability
/// is maximal. perturb, when given, masks coordinates that receive noise
/// (dummy columns can be held at the cell mean).
CoSupervisedSet cosupervise(const Eigen::MatrixXd& member_x,
                            const Eigen::VectorXd& member_y,
                            const MlpModel& model, int m, double epsilon,
                            std::uint64_t seed,
                            const std::vector<bool>* perturb = nullptr);

}  // namespace mlm

#endif  // MLM_PARTITION_HPP
