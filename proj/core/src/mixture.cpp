#include "mlm/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace mlm {

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
  double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

}  // namespace

double cell_distance_regression(const LinearModel& ms, const LinearModel& mt,
                                const CoSupervisedSet& samples_s,
                                const CoSupervisedSet& samples_t) {
  if (samples_s.total() == 0 || samples_t.total() == 0)
    throw MlmError(Err::EmptyCell, "cell distance over empty sample set");
  double sq = 0.0;
  for (const auto* set : {&samples_s, &samples_t}) {
    Eigen::VectorXd ps = lm_predict_rows(ms, set->x);
    Eigen::VectorXd pt = lm_predict_rows(mt, set->x);
    sq += (ps - pt).squaredNorm();
  }
  return sq / static_cast<double>(samples_s.total() + samples_t.total());
}

double cell_distance_classification(const LinearModel& ms,
                                    const LinearModel& mt,
                                    const CoSupervisedSet& samples_s,
                                    const CoSupervisedSet& samples_t) {
  if (samples_s.total() == 0 || samples_t.total() == 0)
    throw MlmError(Err::EmptyCell, "cell distance over empty sample set");
  long tp = 0, fp = 0, fn = 0;
  for (const auto* set : {&samples_s, &samples_t}) {
    Eigen::VectorXd ps = lm_predict_rows(ms, set->x);
    Eigen::VectorXd pt = lm_predict_rows(mt, set->x);
    for (Eigen::Index i = 0; i < ps.size(); ++i) {
      bool s1 = ps[i] >= 0.5;
      bool t1 = pt[i] >= 0.5;
      if (s1 && t1) ++tp;
      else if (s1 && !t1) ++fp;
      else if (!s1 && t1) ++fn;
    }
  }
  if (tp == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(fp + fn) / (2.0 * static_cast<double>(tp));
}

Eigen::MatrixXd cell_distance_matrix(
    const std::vector<LinearModel>& models,
    const std::vector<CoSupervisedSet>& cosets, Task task) {
  if (models.size() != cosets.size())
    throw MlmError(Err::DimensionMismatch, "one model per cell required");
  const int k = static_cast<int>(models.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k, k);
  for (int s = 0; s < k; ++s) {
    for (int t = s + 1; t < k; ++t) {
      double v =
          task == Task::Regression
              ? cell_distance_regression(models[static_cast<size_t>(s)],
                                         models[static_cast<size_t>(t)],
                                         cosets[static_cast<size_t>(s)],
                                         cosets[static_cast<size_t>(t)])
              : cell_distance_classification(models[static_cast<size_t>(s)],
                                             models[static_cast<size_t>(t)],
                                             cosets[static_cast<size_t>(s)],
                                             cosets[static_cast<size_t>(t)]);
      d(s, t) = v;
      d(t, s) = v;
    }
  }
  return d;
}

std::vector<WardStep> ward_linkage(const Eigen::MatrixXd& distances) {
  const int k = static_cast<int>(distances.rows());
  if (distances.cols() != k)
    throw MlmError(Err::DimensionMismatch, "distance matrix must be square");

  // Degenerate +inf pairs (classification with tp = 0) become 10x the
  // largest finite distance so the Lance-Williams arithmetic stays finite
  // and such pairs merge last.
  Eigen::MatrixXd d = distances;
  double max_finite = 0.0;
  bool any_inf = false;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      if (std::isfinite(d(a, b)))
        max_finite = std::max(max_finite, d(a, b));
      else
        any_inf = true;
    }
  if (any_inf) {
    double sentinel = max_finite > 0 ? 10.0 * max_finite : 1.0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (a != b && !std::isfinite(d(a, b))) d(a, b) = sentinel;
  }

  std::vector<WardStep> steps;
  if (k <= 1) return steps;

  // Active clusters carry their current id and size; the working matrix
  // shrinks logically via the active list.
  std::vector<int> id(static_cast<size_t>(k));
  std::iota(id.begin(), id.end(), 0);
  std::vector<double> size(static_cast<size_t>(k), 1.0);
  std::vector<bool> active(static_cast<size_t>(k), true);
  int next_id = k;

  for (int step = 0; step + 1 < k; ++step) {
    int best_a = -1, best_b = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < k; ++a) {
      if (!active[static_cast<size_t>(a)]) continue;
      for (int b = a + 1; b < k; ++b) {
        if (!active[static_cast<size_t>(b)]) continue;
        if (d(a, b) < best) {
          best = d(a, b);
          best_a = a;
          best_b = b;
        }
      }
    }

    // Lance-Williams Ward update against every other active cluster.
    double na = size[static_cast<size_t>(best_a)];
    double nb = size[static_cast<size_t>(best_b)];
    for (int c = 0; c < k; ++c) {
      if (!active[static_cast<size_t>(c)] || c == best_a || c == best_b)
        continue;
      double nc = size[static_cast<size_t>(c)];
      double updated = ((na + nc) * d(best_a, c) + (nb + nc) * d(best_b, c) -
                        nc * d(best_a, best_b)) /
                       (na + nb + nc);
      d(best_a, c) = updated;
      d(c, best_a) = updated;
    }

    steps.push_back({id[static_cast<size_t>(best_a)],
                     id[static_cast<size_t>(best_b)], best});
    size[static_cast<size_t>(best_a)] = na + nb;
    active[static_cast<size_t>(best_b)] = false;
    id[static_cast<size_t>(best_a)] = next_id++;
  }
  return steps;
}

std::vector<int> cut_linkage(const std::vector<WardStep>& steps, int cells,
                             int j_clusters) {
  if (j_clusters < 1 || j_clusters > cells)
    throw MlmError(Err::BadJ, "J must lie in [1, number of cells]");

  // Union-find over cells; apply the first cells - J merges.
  std::vector<int> parent(static_cast<size_t>(cells));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[static_cast<size_t>(a)] != a) {
      parent[static_cast<size_t>(a)] =
          parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
      a = parent[static_cast<size_t>(a)];
    }
    return a;
  };

  // Map linkage ids to a representative cell.
  std::vector<int> rep;
  rep.reserve(static_cast<size_t>(cells) + steps.size());
  for (int c = 0; c < cells; ++c) rep.push_back(c);
  int to_apply = cells - j_clusters;
  for (int s = 0; s < to_apply; ++s) {
    int ra = find(rep[static_cast<size_t>(steps[static_cast<size_t>(s)].a)]);
    int rb = find(rep[static_cast<size_t>(steps[static_cast<size_t>(s)].b)]);
    parent[static_cast<size_t>(std::max(ra, rb))] = std::min(ra, rb);
    rep.push_back(std::min(ra, rb));
  }

  // Number clusters by their lowest member cell.
  std::vector<int> membership(static_cast<size_t>(cells), -1);
  int next = 0;
  std::vector<int> label_of_root(static_cast<size_t>(cells), -1);
  for (int c = 0; c < cells; ++c) {
    int root = find(c);
    if (label_of_root[static_cast<size_t>(root)] < 0)
      label_of_root[static_cast<size_t>(root)] = next++;
    membership[static_cast<size_t>(c)] = label_of_root[static_cast<size_t>(root)];
  }
  return membership;
}

std::vector<int> merge_cells(const Eigen::MatrixXd& distances, int j_clusters) {
  return cut_linkage(ward_linkage(distances),
                     static_cast<int>(distances.rows()), j_clusters);
}

namespace {

Eigen::MatrixXd cell_covariance(const Eigen::MatrixXd& members,
                                const Eigen::VectorXd& mean, CovKind kind,
                                double reg) {
  const Eigen::Index d = members.cols();
  const auto nk = static_cast<double>(members.rows());
  Eigen::MatrixXd centered = members.rowwise() - mean.transpose();
  Eigen::MatrixXd scatter = centered.transpose() * centered / nk;
  switch (kind) {
    case CovKind::Full:
      scatter.diagonal().array() += reg;
      return scatter;
    case CovKind::Diagonal: {
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
      cov.diagonal() = scatter.diagonal().array() + reg;
      return cov;
    }
    case CovKind::Spherical: {
      double var = scatter.trace() / static_cast<double>(d) + reg;
      return var * Eigen::MatrixXd::Identity(d, d);
    }
    case CovKind::Pooled:
      // handled by the caller
      scatter.diagonal().array() += reg;
      return scatter;
  }
  return scatter;
}

LinearModel fit_local(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                      Task task, double lasso_alpha) {
  if (task == Task::Regression)
    return lasso_alpha > 0 ? fit_lasso(xs, ys, lasso_alpha) : fit_ols(xs, ys);

  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < ys.size(); ++i) (ys[i] == 1.0 ? has1 : has0) = true;
  if (has0 && has1) return fit_logistic(xs, ys, lasso_alpha);

  // Single-class pool: a constant model with a smoothed-logit intercept
  // (the paper's PD analysis likewise ends with a constant local model).
  LinearModel constant;
  constant.task = Task::BinaryClassification;
  constant.lasso_alpha = lasso_alpha;
  double n1 = ys.sum();
  double rate = (n1 + 0.5) / (static_cast<double>(ys.size()) + 1.0);
  constant.intercept = std::log(rate / (1.0 - rate));
  constant.coefficients = Eigen::VectorXd::Zero(xs.cols());
  return constant;
}

}  // namespace

MlmModel build_mlm(const Dataset& train_std, const CellPartition& partition,
                   const std::vector<CoSupervisedSet>& cosets,
                   const std::vector<int>& membership, const Scaler& scaler,
                   double lasso_alpha, CovKind cov_kind) {
  const int cells = partition.cell_count();
  if (static_cast<int>(cosets.size()) != cells ||
      static_cast<int>(membership.size()) != cells)
    throw MlmError(Err::DimensionMismatch,
                   "membership and cosets must cover every cell");
  const Eigen::Index n = train_std.n();
  const Eigen::Index p = train_std.p();

  int j_count = 0;
  for (int m : membership) j_count = std::max(j_count, m + 1);

  // Per-cell original members.
  std::vector<std::vector<Eigen::Index>> rows_of_cell(
      static_cast<size_t>(cells));
  for (Eigen::Index i = 0; i < n; ++i)
    rows_of_cell[static_cast<size_t>(partition.cell_of_sample[i])].push_back(i);

  double reg = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    double mu = train_std.x.col(j).mean();
    reg += (train_std.x.col(j).array() - mu).square().sum() /
           static_cast<double>(n);
  }
  reg = std::max(1e-6 * reg / static_cast<double>(p), 1e-12);

  std::vector<Eigen::VectorXd> cell_means(static_cast<size_t>(cells));
  std::vector<Eigen::MatrixXd> cell_covs(static_cast<size_t>(cells));
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(p, p);
  for (int c = 0; c < cells; ++c) {
    const auto& rows = rows_of_cell[static_cast<size_t>(c)];
    Eigen::MatrixXd members(static_cast<Eigen::Index>(rows.size()), p);
    for (size_t r = 0; r < rows.size(); ++r)
      members.row(static_cast<Eigen::Index>(r)) = train_std.x.row(rows[r]);
    Eigen::VectorXd mean = members.colwise().mean();
    cell_means[static_cast<size_t>(c)] = mean;
    if (cov_kind == CovKind::Pooled) {
      Eigen::MatrixXd centered = members.rowwise() - mean.transpose();
      pooled += centered.transpose() * centered;
    } else {
      cell_covs[static_cast<size_t>(c)] =
          cell_covariance(members, mean, cov_kind, reg);
    }
  }
  if (cov_kind == CovKind::Pooled) {
    pooled /= static_cast<double>(n);
    pooled.diagonal().array() += reg;
    for (int c = 0; c < cells; ++c) cell_covs[static_cast<size_t>(c)] = pooled;
  }

  struct Draft {
    std::vector<int> member_cells;
    int size = 0;
    double prior = 0.0;
  };
  std::vector<Draft> drafts(static_cast<size_t>(j_count));
  for (int c = 0; c < cells; ++c) {
    auto& d = drafts[static_cast<size_t>(membership[static_cast<size_t>(c)])];
    d.member_cells.push_back(c);
    d.size += partition.cell_counts[static_cast<size_t>(c)];
    d.prior += static_cast<double>(partition.cell_counts[static_cast<size_t>(c)]) /
               static_cast<double>(n);
  }

  // Report order: largest EPIC first, ties by lowest member cell.
  std::vector<int> order(static_cast<size_t>(j_count));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& da = drafts[static_cast<size_t>(a)];
    const auto& db = drafts[static_cast<size_t>(b)];
    if (da.size != db.size) return da.size > db.size;
    return da.member_cells.front() < db.member_cells.front();
  });

  MlmModel model;
  model.scaler = scaler;
  model.task = train_std.task;
  model.lasso_alpha = lasso_alpha;
  model.density_cov_kind = cov_kind;

  std::vector<int> epic_of_cell(static_cast<size_t>(cells), -1);
  for (size_t pos = 0; pos < order.size(); ++pos) {
    const Draft& draft = drafts[static_cast<size_t>(order[pos])];
    Epic epic;
    epic.member_cells = draft.member_cells;
    epic.size = draft.size;
    epic.prior = draft.prior;

    Eigen::Index rows = 0;
    for (int c : draft.member_cells)
      rows += cosets[static_cast<size_t>(c)].total();
    Eigen::MatrixXd xs(rows, p);
    Eigen::VectorXd ys(rows);
    Eigen::Index at = 0;
    for (int c : draft.member_cells) {
      const auto& set = cosets[static_cast<size_t>(c)];
      xs.middleRows(at, set.total()) = set.x;
      ys.segment(at, set.total()) = set.y;
      at += set.total();
    }
    epic.local_model = fit_local(xs, ys, train_std.task, lasso_alpha);

    EpicDensity density;
    density.k = static_cast<int>(draft.member_cells.size());
    density.cov_kind = cov_kind;
    density.priors.resize(density.k);
    for (int idx = 0; idx < density.k; ++idx) {
      int c = draft.member_cells[static_cast<size_t>(idx)];
      density.priors[idx] =
          static_cast<double>(partition.cell_counts[static_cast<size_t>(c)]) /
          static_cast<double>(n) / draft.prior;
      density.means.push_back(cell_means[static_cast<size_t>(c)]);
      density.covariances.push_back(cell_covs[static_cast<size_t>(c)]);
      epic_of_cell[static_cast<size_t>(c)] = static_cast<int>(pos);
    }
    epic.density = std::move(density);
    model.epics.push_back(std::move(epic));
  }

  model.train_epic_labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    model.train_epic_labels[i] =
        epic_of_cell[static_cast<size_t>(partition.cell_of_sample[i])];

  return model;
}

namespace {

// log(pi~_j f_j(x)) per EPIC, standardized input.
Eigen::VectorXd weighted_log_epic_densities(
    const MlmModel& model, const std::vector<GmmEvaluator>& evals,
    const Eigen::VectorXd& x_std) {
  Eigen::VectorXd out(model.epic_count());
  for (int j = 0; j < model.epic_count(); ++j)
    out[j] = std::log(model.epics[static_cast<size_t>(j)].prior) +
             evals[static_cast<size_t>(j)].log_density(x_std);
  return out;
}

std::vector<GmmEvaluator> make_evaluators(const MlmModel& model) {
  std::vector<GmmEvaluator> evals;
  evals.reserve(model.epics.size());
  for (const auto& e : model.epics) evals.emplace_back(e.density);
  return evals;
}

}  // namespace

Eigen::VectorXd epic_posteriors(const MlmModel& model,
                                const Eigen::VectorXd& x_std) {
  auto evals = make_evaluators(model);
  Eigen::VectorXd wld = weighted_log_epic_densities(model, evals, x_std);
  double lse = log_sum_exp(wld);
  Eigen::VectorXd gamma(model.epic_count());
  for (int j = 0; j < model.epic_count(); ++j)
    gamma[j] = std::exp(wld[j] - lse);
  return gamma;
}

double predict_soft(const MlmModel& model, const Eigen::VectorXd& x_raw) {
  Eigen::VectorXd x_std = model.scaler.transform(x_raw);
  Eigen::VectorXd gamma = epic_posteriors(model, x_std);
  double out = 0.0;
  for (int j = 0; j < model.epic_count(); ++j)
    out += gamma[j] *
           lm_predict(model.epics[static_cast<size_t>(j)].local_model, x_std);
  return out;
}

double predict_hard(const MlmModel& model, const Eigen::VectorXd& x_raw) {
  Eigen::VectorXd x_std = model.scaler.transform(x_raw);
  auto evals = make_evaluators(model);
  Eigen::VectorXd wld = weighted_log_epic_densities(model, evals, x_std);
  int best = 0;
  for (int j = 1; j < model.epic_count(); ++j)
    if (wld[j] > wld[best]) best = j;
  return lm_predict(model.epics[static_cast<size_t>(best)].local_model, x_std);
}

Eigen::MatrixXd epic_posteriors_rows(const MlmModel& model,
                                     const Eigen::MatrixXd& xs_raw) {
  Eigen::MatrixXd std_rows = model.scaler.transform_rows(xs_raw);
  auto evals = make_evaluators(model);
  Eigen::MatrixXd gammas(xs_raw.rows(), model.epic_count());
  for (Eigen::Index i = 0; i < xs_raw.rows(); ++i) {
    Eigen::VectorXd wld =
        weighted_log_epic_densities(model, evals, std_rows.row(i).transpose());
    double lse = log_sum_exp(wld);
    for (int j = 0; j < model.epic_count(); ++j)
      gammas(i, j) = std::exp(wld[j] - lse);
  }
  return gammas;
}

Eigen::VectorXd predict_soft_rows(const MlmModel& model,
                                  const Eigen::MatrixXd& xs_raw) {
  Eigen::MatrixXd std_rows = model.scaler.transform_rows(xs_raw);
  auto evals = make_evaluators(model);
  Eigen::MatrixXd preds(xs_raw.rows(), model.epic_count());
  for (int j = 0; j < model.epic_count(); ++j)
    preds.col(j) =
        lm_predict_rows(model.epics[static_cast<size_t>(j)].local_model, std_rows);
  Eigen::VectorXd out(xs_raw.rows());
  for (Eigen::Index i = 0; i < xs_raw.rows(); ++i) {
    Eigen::VectorXd wld =
        weighted_log_epic_densities(model, evals, std_rows.row(i).transpose());
    double lse = log_sum_exp(wld);
    double v = 0.0;
    for (int j = 0; j < model.epic_count(); ++j)
      v += std::exp(wld[j] - lse) * preds(i, j);
    out[i] = v;
  }
  return out;
}

Eigen::VectorXd predict_hard_rows(const MlmModel& model,
                                  const Eigen::MatrixXd& xs_raw) {
  Eigen::MatrixXd std_rows = model.scaler.transform_rows(xs_raw);
  auto evals = make_evaluators(model);
  Eigen::VectorXd out(xs_raw.rows());
  for (Eigen::Index i = 0; i < xs_raw.rows(); ++i) {
    Eigen::VectorXd wld =
        weighted_log_epic_densities(model, evals, std_rows.row(i).transpose());
    int best = 0;
    for (int j = 1; j < model.epic_count(); ++j)
      if (wld[j] > wld[best]) best = j;
    out[i] = lm_predict(model.epics[static_cast<size_t>(best)].local_model,
                        std_rows.row(i).transpose());
  }
  return out;
}

}  // namespace mlm
