#include "mlm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlm/metrics.hpp"
#include "mlm/rng.hpp"

namespace mlm {

namespace {

TrainMetrics score_predictions(Task task, const Eigen::VectorXd& pred,
                               const Eigen::VectorXd& truth) {
  TrainMetrics m;
  if (task == Task::Regression) {
    m.rmse = rmse(pred, truth);
  } else {
    m.auc = auc(pred, truth);
    m.f1 = f1_at_half(pred, truth);
  }
  return m;
}

LinearModel fit_cell_model(const CoSupervisedSet& set, Task task,
                           double lasso_alpha) {
  if (task == Task::Regression)
    return lasso_alpha > 0 ? fit_lasso(set.x, set.y, lasso_alpha)
                           : fit_ols(set.x, set.y);
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < set.y.size(); ++i)
    (set.y[i] == 1.0 ? has1 : has0) = true;
  if (has0 && has1) return fit_logistic(set.x, set.y, lasso_alpha);

  LinearModel constant;  // pure cell: constant probability model
  constant.task = Task::BinaryClassification;
  constant.lasso_alpha = lasso_alpha;
  double n1 = set.y.sum();
  double rate = (n1 + 0.5) / (static_cast<double>(set.y.size()) + 1.0);
  constant.intercept = std::log(rate / (1.0 - rate));
  constant.coefficients = Eigen::VectorXd::Zero(set.x.cols());
  return constant;
}

}  // namespace

TrainedArtifact train_core(const Dataset& encoded, const PipelineConfig& cfg) {
  cfg.validate();

  TrainedArtifact art;
  art.config = cfg;
  art.schema = schema_of(encoded, cfg.target);
  art.train_x = encoded.x;
  art.train_y = encoded.y;

  Dataset train_std;
  Scaler scaler;
  if (cfg.standardize) {
    auto [std_ds, sc] = standardize(encoded);
    train_std = std::move(std_ds);
    scaler = std::move(sc);
  } else {
    train_std = encoded;
    scaler = Scaler::identity(encoded.p());
  }

  art.mlp = train_mlp(train_std, cfg.widths, cfg.epochs, cfg.batch_size,
                      cfg.learning_rate, derive_seed(cfg.seed, {0x6D6C70u}),
                      cfg.activation);

  std::vector<int> k_per_layer(cfg.widths.size(), cfg.k_per_layer);
  for (auto& k : k_per_layer)
    k = std::min<int>(k, static_cast<int>(train_std.n()));
  art.layers = layer_cells(art.mlp, train_std, k_per_layer,
                           derive_seed(cfg.seed, {0x6C6179u}));
  art.partition = assign_cells(art.layers, art.mlp, train_std);
  const int cells = art.partition.cell_count();

  std::vector<bool> perturb(static_cast<size_t>(train_std.p()), true);
  if (!cfg.perturb_dummies)
    for (size_t j = 0; j < perturb.size(); ++j)
      perturb[j] = train_std.column_kinds[j] == ColumnKind::Continuous;

  std::vector<std::vector<Eigen::Index>> rows_of_cell(
      static_cast<size_t>(cells));
  for (Eigen::Index i = 0; i < train_std.n(); ++i)
    rows_of_cell[static_cast<size_t>(art.partition.cell_of_sample[i])]
        .push_back(i);

  std::vector<CoSupervisedSet> cosets;
  std::vector<LinearModel> cell_models;
  for (int c = 0; c < cells; ++c) {
    const auto& rows = rows_of_cell[static_cast<size_t>(c)];
    Eigen::MatrixXd mx(static_cast<Eigen::Index>(rows.size()), train_std.p());
    Eigen::VectorXd my(static_cast<Eigen::Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
      mx.row(static_cast<Eigen::Index>(r)) = train_std.x.row(rows[r]);
      my[static_cast<Eigen::Index>(r)] = train_std.y[rows[r]];
    }
    CoSupervisedSet set = cosupervise(
        mx, my, art.mlp, cfg.m, cfg.epsilon,
        derive_seed(cfg.seed, {0x636Fu, static_cast<std::uint64_t>(c)}),
        &perturb);
    set.cell = c;
    cell_models.push_back(fit_cell_model(set, cfg.task, cfg.lasso_alpha));
    cosets.push_back(std::move(set));
  }

  int j_target = cfg.epics == 0 ? cells : cfg.epics;
  if (j_target > cells) {
    art.warnings.push_back("requested " + std::to_string(cfg.epics) +
                           " EPICs but only " + std::to_string(cells) +
                           " cells formed; clamping");
    j_target = cells;
  }

  std::vector<int> membership;
  if (j_target == cells) {
    membership.resize(static_cast<size_t>(cells));
    std::iota(membership.begin(), membership.end(), 0);
  } else {
    Eigen::MatrixXd dmat = cell_distance_matrix(cell_models, cosets, cfg.task);
    membership = merge_cells(dmat, j_target);
  }

  art.mlm = build_mlm(train_std, art.partition, cosets, membership, scaler,
                      cfg.lasso_alpha, cfg.cov_kind);

  Eigen::VectorXd train_pred = predict_soft_rows(art.mlm, art.train_x);
  art.train_metrics = score_predictions(cfg.task, train_pred, art.train_y);
  return art;
}

TrainedArtifact train_pipeline(const PipelineConfig& cfg,
                               std::optional<Dataset>* holdout_out) {
  cfg.validate();
  Dataset raw = load_csv(cfg.data, cfg.target, cfg.task, cfg.nominal);
  Dataset encoded = dummy_encode(raw);

  if (cfg.test_fraction > 0.0) {
    auto [train_part, test_part] =
        split(encoded, cfg.test_fraction, derive_seed(cfg.seed, {0x73706Cu}));
    if (holdout_out) *holdout_out = test_part;
    return train_core(train_part, cfg);
  }
  if (holdout_out) holdout_out->reset();
  return train_core(encoded, cfg);
}

TrainMetrics evaluate_artifact(const TrainedArtifact& artifact,
                               const Eigen::MatrixXd& x_raw,
                               const Eigen::VectorXd& y) {
  Eigen::VectorXd pred = predict_soft_rows(artifact.mlm, x_raw);
  return score_predictions(artifact.config.task, pred, y);
}

CvResult cv_k(const PipelineConfig& cfg, const std::vector<int>& grid,
              int folds) {
  cfg.validate();
  if (grid.empty()) throw MlmError(Err::ConfigError, "empty K grid");
  for (int k : grid)
    if (k < 1) throw MlmError(Err::ConfigError, "grid entries must be >= 1");
  if (folds < 2) throw MlmError(Err::FoldTooSmall, "folds must be >= 2");

  Dataset raw = load_csv(cfg.data, cfg.target, cfg.task, cfg.nominal);
  Dataset encoded = dummy_encode(raw);
  const Eigen::Index n = encoded.n();
  if (n < folds)
    throw MlmError(Err::FoldTooSmall, "more folds than samples");

  // Deterministic fold assignment, stratified by class for classification.
  std::vector<int> fold_of(static_cast<size_t>(n));
  Rng rng = make_rng(derive_seed(cfg.seed, {0x6376u}));
  if (cfg.task == Task::BinaryClassification) {
    for (double cls : {0.0, 1.0}) {
      std::vector<Eigen::Index> members;
      for (Eigen::Index i = 0; i < n; ++i)
        if (encoded.y[i] == cls) members.push_back(i);
      std::shuffle(members.begin(), members.end(), rng);
      for (size_t r = 0; r < members.size(); ++r)
        fold_of[static_cast<size_t>(members[r])] =
            static_cast<int>(r % static_cast<size_t>(folds));
    }
  } else {
    std::vector<Eigen::Index> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    for (size_t r = 0; r < all.size(); ++r)
      fold_of[static_cast<size_t>(all[r])] =
          static_cast<int>(r % static_cast<size_t>(folds));
  }

  auto subset = [&](int fold, bool validation) {
    Dataset part;
    part.task = encoded.task;
    part.feature_names = encoded.feature_names;
    part.column_kinds = encoded.column_kinds;
    part.encodings = encoded.encodings;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i)
      if ((fold_of[static_cast<size_t>(i)] == fold) == validation)
        keep.push_back(i);
    part.x.resize(static_cast<Eigen::Index>(keep.size()), encoded.p());
    part.y.resize(static_cast<Eigen::Index>(keep.size()));
    for (size_t r = 0; r < keep.size(); ++r) {
      part.x.row(static_cast<Eigen::Index>(r)) = encoded.x.row(keep[r]);
      part.y[static_cast<Eigen::Index>(r)] = encoded.y[keep[r]];
    }
    return part;
  };

  CvResult result;
  result.metric = cfg.task == Task::Regression ? "rmse" : "auc";

  for (int k : grid) {
    CvRow row;
    row.k = k;
    for (int fold = 0; fold < folds; ++fold) {
      Dataset fold_train = subset(fold, false);
      Dataset fold_val = subset(fold, true);
      if (fold_train.n() < 2 || fold_val.n() < 1)
        throw MlmError(Err::FoldTooSmall, "fold too small to train on");

      PipelineConfig fold_cfg = cfg;
      fold_cfg.k_per_layer = k;
      fold_cfg.epics = 0;  // MLM-cell scores the candidates
      fold_cfg.test_fraction = 0.0;
      fold_cfg.seed = derive_seed(cfg.seed, {0x666Fu,
                                             static_cast<std::uint64_t>(k),
                                             static_cast<std::uint64_t>(fold)});
      TrainedArtifact art = train_core(fold_train, fold_cfg);
      Eigen::VectorXd pred = predict_soft_rows(art.mlm, fold_val.x);
      row.fold_scores.push_back(cfg.task == Task::Regression
                                    ? rmse(pred, fold_val.y)
                                    : auc(pred, fold_val.y));
    }
    row.mean_score =
        std::accumulate(row.fold_scores.begin(), row.fold_scores.end(), 0.0) /
        static_cast<double>(row.fold_scores.size());
    result.table.push_back(std::move(row));
  }

  // argbest; ties prefer the smaller K (the table is scanned in grid
  // order, so sort a copy of indices by K first).
  std::vector<size_t> order(result.table.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return result.table[a].k < result.table[b].k;
  });
  size_t best = order[0];
  for (size_t idx : order) {
    double cur = result.table[idx].mean_score;
    double ref = result.table[best].mean_score;
    bool better = cfg.task == Task::Regression ? cur < ref : cur > ref;
    if (better) best = idx;
  }
  result.chosen_k = result.table[best].k;
  return result;
}

}  // namespace mlm
