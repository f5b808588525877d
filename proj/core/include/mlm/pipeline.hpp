#ifndef MLM_PIPELINE_HPP
#define MLM_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "mlm/config.hpp"
#include "mlm/dataset.hpp"
#include "mlm/interpret.hpp"
#include "mlm/mixture.hpp"
#include "mlm/mlp.hpp"
#include "mlm/partition.hpp"

namespace mlm {

struct TrainMetrics {
  double rmse = 0.0;  // regression
  double auc = 0.0;   // classification
  double f1 = 0.0;
};

/// Everything the CLI persists: model, preprocessing, partition summary,
/// and the encoded training data (kept so explain commands are
/// self-contained).
struct TrainedArtifact {
  PipelineConfig config;
  DataSchema schema;
  MlpModel mlp;
  LayerClusterings layers;
  CellPartition partition;
  MlmModel mlm;
  Eigen::MatrixXd train_x;  // encoded, original units
  Eigen::VectorXd train_y;
  TrainMetrics train_metrics;
  std::vector<std::string> warnings;
};

/// data -> mlp -> layer cells -> cells -> co-supervision -> per-cell fits
/// -> Ward merge -> MLM, on an already encoded dataset.
TrainedArtifact train_core(const Dataset& encoded, const PipelineConfig& cfg);

/// Loads and encodes cfg.data, splits off a holdout when test_fraction is
/// set, then runs train_core. holdout_out, when non-null, receives the
/// holdout rows.
TrainedArtifact train_pipeline(const PipelineConfig& cfg,
                               std::optional<Dataset>* holdout_out = nullptr);

TrainMetrics evaluate_artifact(const TrainedArtifact& artifact,
                               const Eigen::MatrixXd& x_raw,
                               const Eigen::VectorXd& y);

struct CvRow {
  int k = 0;
  std::vector<double> fold_scores;
  double mean_score = 0.0;
};

struct CvResult {
  int chosen_k = 0;
  std::vector<CvRow> table;
  std::string metric;  // "rmse" or "auc"
};

/// k-fold cross-validation over the K_l grid, scoring MLM-cell soft
/// predictions (RMSE for regression, AUC for classification). Ties choose
/// the smaller K.
CvResult cv_k(const PipelineConfig& cfg, const std::vector<int>& grid,
              int folds);

}  // namespace mlm

#endif  // MLM_PIPELINE_HPP
