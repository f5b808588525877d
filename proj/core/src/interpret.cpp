#include "mlm/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mlm {

namespace {

double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double e : v) mx = std::max(mx, e);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double e : v) s += std::exp(e - mx);
  return mx + std::log(s);
}

double f1_score(const std::vector<int>& predicted, const std::vector<int>& truth) {
  long tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == 1 && truth[i] == 1) ++tp;
    else if (predicted[i] == 1 && truth[i] == 0) ++fp;
    else if (predicted[i] == 0 && truth[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;  // includes the no-positive-predictions case
  return 2.0 * static_cast<double>(tp) /
         (2.0 * static_cast<double>(tp) + static_cast<double>(fp) +
          static_cast<double>(fn));
}

}  // namespace

int marginal_map_classify(const MlmModel& model, int j,
                          const std::vector<int>& s,
                          const Eigen::VectorXd& x_std) {
  if (s.empty()) throw MlmError(Err::EmptySubset, "empty variable subset");
  if (j < 0 || j >= model.epic_count())
    throw MlmError(Err::UnknownEpic, "epic id out of range");

  Eigen::VectorXd sub(static_cast<Eigen::Index>(s.size()));
  for (size_t a = 0; a < s.size(); ++a) sub[static_cast<Eigen::Index>(a)] = x_std[s[a]];

  double own = 0.0;
  std::vector<double> rest;
  for (int jp = 0; jp < model.epic_count(); ++jp) {
    Gmm marg = marginal(model.epics[static_cast<size_t>(jp)].density, s);
    double wld = std::log(model.epics[static_cast<size_t>(jp)].prior) +
                 log_density(marg, sub);
    if (jp == j) own = wld;
    else rest.push_back(wld);
  }
  if (rest.empty()) return 1;  // single EPIC: the rest-sum is empty
  return own >= log_sum_exp(rest) ? 1 : 0;
}

ExplainableDims explainable_dimensions(const MlmModel& model,
                                       const Dataset& train, int j,
                                       double xi) {
  if (!(xi > 0.0 && xi < 1.0))
    throw MlmError(Err::InvalidArgument, "xi must lie in (0,1)");
  if (j < 0 || j >= model.epic_count())
    throw MlmError(Err::UnknownEpic, "epic id out of range");
  const Eigen::Index n = train.n();
  const int p = static_cast<int>(train.p());
  if (model.train_epic_labels.size() != n)
    throw MlmError(Err::DimensionMismatch,
                   "training data does not match the stored epic labels");

  std::vector<int> truth(static_cast<size_t>(n));
  int epic_size = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    truth[static_cast<size_t>(i)] = model.train_epic_labels[i] == j ? 1 : 0;
    epic_size += truth[static_cast<size_t>(i)];
  }
  if (epic_size == 0) throw MlmError(Err::EmptyCell, "epic has no members");

  Eigen::MatrixXd x_std = model.scaler.transform_rows(train.x);

  ExplainableDims result;
  result.epic = j;
  result.xi = xi;

  std::vector<int> selected;
  double rate = 0.0;

  // Scores every single-variable extension of the current set with the
  // marginal MAP rule; evaluators are rebuilt per candidate because each
  // candidate set has its own marginals.
  auto score_subset = [&](const std::vector<int>& s) {
    std::vector<GmmEvaluator> evals;
    std::vector<double> log_priors;
    evals.reserve(model.epics.size());
    std::vector<Gmm> margs;
    margs.reserve(model.epics.size());
    for (const auto& epic : model.epics) {
      margs.push_back(marginal(epic.density, s));
      log_priors.push_back(std::log(epic.prior));
    }
    for (const auto& m : margs) evals.emplace_back(m);

    std::vector<int> predicted(static_cast<size_t>(n));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(s.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (size_t a = 0; a < s.size(); ++a)
        sub[static_cast<Eigen::Index>(a)] = x_std(i, s[a]);
      double own = 0.0;
      std::vector<double> rest;
      for (int jp = 0; jp < model.epic_count(); ++jp) {
        double wld = log_priors[static_cast<size_t>(jp)] +
                     evals[static_cast<size_t>(jp)].log_density(sub);
        if (jp == j) own = wld;
        else rest.push_back(wld);
      }
      int cls = rest.empty() ? 1 : (own >= log_sum_exp(rest) ? 1 : 0);
      predicted[static_cast<size_t>(i)] = cls;
    }
    return f1_score(predicted, truth);
  };

  while (rate <= xi && static_cast<int>(selected.size()) < p) {
    int best_var = -1;
    double best_rate = -1.0;
    for (int v = 0; v < p; ++v) {
      if (std::find(selected.begin(), selected.end(), v) != selected.end())
        continue;
      std::vector<int> candidate = selected;
      candidate.push_back(v);
      double r = score_subset(candidate);
      if (r > best_rate) {  // ties keep the lowest variable index
        best_rate = r;
        best_var = v;
      }
    }
    selected.push_back(best_var);
    rate = best_rate;
    result.step_rates.push_back(rate);
  }

  result.dims = selected;
  result.rate = rate;
  result.found = rate > xi;
  return result;
}

namespace {

// Exact split comparison on integer counts. The figure of merit per split
// is (c0L^2+c1L^2)/nL + (c0R^2+c1R^2)/nR, larger is better; fractions are
// compared by cross-multiplication so exact ties resolve by the stated
// tie-breaking rules instead of floating-point noise.
struct SplitScore {
  __int128 num = -1;  // A*nR + B*nL
  long long den = 1;  // nL*nR

  bool better_than(const SplitScore& other) const {
    if (other.num < 0) return num >= 0;
    if (num < 0) return false;
    return num * other.den > other.num * den;
  }
};

struct BestSplit {
  int var = -1;
  double threshold = 0.0;
  SplitScore score;
};

BestSplit find_best_split(const Eigen::MatrixXd& x, const std::vector<int>& q,
                          const std::vector<int>& rows) {
  const int p = static_cast<int>(x.cols());
  const long long n = static_cast<long long>(rows.size());
  BestSplit best;

  std::vector<std::pair<double, int>> order(rows.size());
  for (int var = 0; var < p; ++var) {
    for (size_t i = 0; i < rows.size(); ++i)
      order[i] = {x(rows[i], var), q[static_cast<size_t>(rows[i])]};
    std::sort(order.begin(), order.end());

    long long c1_total = 0;
    for (const auto& [value, label] : order) c1_total += label;

    long long nl = 0, c1l = 0;
    for (size_t i = 0; i + 1 < order.size(); ++i) {
      ++nl;
      c1l += order[i].second;
      if (order[i].first == order[i + 1].first) continue;  // not a boundary

      long long nr = n - nl;
      long long c0l = nl - c1l;
      long long c1r = c1_total - c1l;
      long long c0r = nr - c1r;
      __int128 a = static_cast<__int128>(c0l) * c0l +
                   static_cast<__int128>(c1l) * c1l;
      __int128 b = static_cast<__int128>(c0r) * c0r +
                   static_cast<__int128>(c1r) * c1r;
      SplitScore score;
      score.num = a * nr + b * nl;
      score.den = nl * nr;

      double threshold = 0.5 * (order[i].first + order[i + 1].first);
      // Strict improvement only: variables ascend and the sweep meets
      // thresholds in increasing order, so ties keep the lowest variable
      // and then the lowest threshold.
      if (score.better_than(best.score)) {
        best.var = var;
        best.threshold = threshold;
        best.score = score;
      }
    }
  }
  return best;
}

int build_node(const Eigen::MatrixXd& x, const std::vector<int>& q,
               std::vector<int> rows, int depth, DecisionTree* tree) {
  int id = static_cast<int>(tree->nodes.size());
  tree->nodes.emplace_back();
  {
    TreeNode& node = tree->nodes.back();
    node.depth = depth;
    node.samples = std::move(rows);
    for (int r : node.samples) node.class1 += q[static_cast<size_t>(r)];
  }

  const std::vector<int>& u = tree->nodes[static_cast<size_t>(id)].samples;
  int class1 = tree->nodes[static_cast<size_t>(id)].class1;

  // Pure nodes are not split; nodes of identical rows cannot be.
  if (class1 == 0 || class1 == static_cast<int>(u.size())) return id;
  BestSplit split = find_best_split(x, q, u);
  if (split.var < 0) return id;

  std::vector<int> left_rows, right_rows;
  for (int r : u) {
    if (x(r, split.var) <= split.threshold) left_rows.push_back(r);
    else right_rows.push_back(r);
  }

  int left = build_node(x, q, std::move(left_rows), depth + 1, tree);
  int right = build_node(x, q, std::move(right_rows), depth + 1, tree);
  TreeNode& node = tree->nodes[static_cast<size_t>(id)];
  node.split_var = split.var;
  node.threshold = split.threshold;
  node.left = left;
  node.right = right;
  return id;
}

}  // namespace

DecisionTree grow_tree(const Eigen::MatrixXd& x, const std::vector<int>& q) {
  if (x.rows() < 1) throw MlmError(Err::TooFewPoints, "empty training set");
  if (static_cast<Eigen::Index>(q.size()) != x.rows())
    throw MlmError(Err::DimensionMismatch, "labels do not match rows");
  for (int label : q)
    if (label != 0 && label != 1)
      throw MlmError(Err::InvalidArgument, "labels must be 0/1");

  DecisionTree tree;
  std::vector<int> rows(static_cast<size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  build_node(x, q, std::move(rows), 0, &tree);
  return tree;
}

namespace {

void collect_pruned(const DecisionTree& tree, int id, double psi, int eta,
                    std::vector<int>* out) {
  const TreeNode& node = tree.nodes[static_cast<size_t>(id)];
  if (node.purity() >= psi) {
    if (node.size() > eta) out->push_back(id);
    return;  // descendants pruned
  }
  if (node.is_leaf()) return;
  collect_pruned(tree, node.left, psi, eta, out);
  collect_pruned(tree, node.right, psi, eta, out);
}

}  // namespace

std::vector<int> prune_explainable(const DecisionTree& tree, double psi,
                                   int eta) {
  if (!(psi > 0.0 && psi <= 1.0))
    throw MlmError(Err::InvalidArgument, "psi must lie in (0,1]");
  if (eta < 0) throw MlmError(Err::InvalidArgument, "eta must be >= 0");
  std::vector<int> out;
  if (!tree.nodes.empty()) collect_pruned(tree, 0, psi, eta, &out);
  return out;
}

ExplainableCondition path_to_condition(const DecisionTree& tree, int leaf_id) {
  if (leaf_id < 0 || leaf_id >= static_cast<int>(tree.nodes.size()))
    throw MlmError(Err::IndexOutOfRange, "leaf id out of range");

  // Parent pointers are implicit; walk down from the root re-tracing the
  // branch containing the leaf's samples by id ranges.
  std::vector<int> path;  // node ids root..leaf
  {
    std::vector<int> parents(tree.nodes.size(), -1);
    for (size_t i = 0; i < tree.nodes.size(); ++i) {
      const TreeNode& node = tree.nodes[i];
      if (!node.is_leaf()) {
        parents[static_cast<size_t>(node.left)] = static_cast<int>(i);
        parents[static_cast<size_t>(node.right)] = static_cast<int>(i);
      }
    }
    for (int at = leaf_id; at >= 0; at = parents[static_cast<size_t>(at)])
      path.push_back(at);
    std::reverse(path.begin(), path.end());
  }

  const TreeNode& leaf = tree.nodes[static_cast<size_t>(leaf_id)];
  ExplainableCondition cond;
  cond.covered = leaf.size();
  cond.purity = leaf.purity();
  cond.depth = leaf.depth;
  cond.rows = leaf.samples;

  for (size_t step = 0; step + 1 < path.size(); ++step) {
    const TreeNode& node = tree.nodes[static_cast<size_t>(path[step])];
    bool went_left = node.left == path[step + 1];
    Interval& iv = cond.intervals[node.split_var];
    if (went_left) iv.hi = std::min(iv.hi, node.threshold);
    else iv.lo = std::max(iv.lo, node.threshold);
  }
  // Drop variables whose accumulated region is all of R.
  for (auto it = cond.intervals.begin(); it != cond.intervals.end();)
    it = it->second.is_trivial() ? cond.intervals.erase(it) : std::next(it);
  return cond;
}

std::vector<ExplainableCondition> explain_epic_pr(const MlmModel& model,
                                                  const Dataset& train, int j,
                                                  double psi, int eta) {
  if (j < 0 || j >= model.epic_count())
    throw MlmError(Err::UnknownEpic, "epic id out of range");
  if (model.train_epic_labels.size() != train.n())
    throw MlmError(Err::DimensionMismatch,
                   "training data does not match the stored epic labels");

  std::vector<int> q(static_cast<size_t>(train.n()));
  for (Eigen::Index i = 0; i < train.n(); ++i)
    q[static_cast<size_t>(i)] = model.train_epic_labels[i] == j ? 1 : 0;

  DecisionTree tree = grow_tree(train.x, q);
  std::vector<int> leaves = prune_explainable(tree, psi, eta);

  std::vector<ExplainableCondition> out;
  for (int leaf : leaves) {
    ExplainableCondition cond = path_to_condition(tree, leaf);
    cond.epic = j;
    out.push_back(std::move(cond));
  }
  std::sort(out.begin(), out.end(),
            [](const ExplainableCondition& a, const ExplainableCondition& b) {
              if (a.covered != b.covered) return a.covered > b.covered;
              return a.rows < b.rows;
            });
  return out;
}

std::string render_condition(const ExplainableCondition& cond,
                             const std::vector<std::string>& feature_names,
                             const std::vector<ColumnKind>& column_kinds) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [var, iv] : cond.intervals) {
    if (!first) out << ", ";
    first = false;
    const std::string& name = feature_names[static_cast<size_t>(var)];
    if (column_kinds[static_cast<size_t>(var)] == ColumnKind::BinaryDummy) {
      // A dummy split separates 0 from 1: upper bound present means the
      // zero side, i.e. "origin != level".
      auto colon = name.find(':');
      std::string origin = colon == std::string::npos ? name : name.substr(0, colon);
      std::string level = colon == std::string::npos ? "1" : name.substr(colon + 1);
      bool is_zero_side = std::isfinite(iv.hi);
      if (colon == std::string::npos)
        out << origin << " = " << (is_zero_side ? "0" : "1");
      else
        out << origin << (is_zero_side ? " != " : " = ") << level;
      continue;
    }
    bool has_lo = std::isfinite(iv.lo);
    bool has_hi = std::isfinite(iv.hi);
    if (has_lo && has_hi)
      out << iv.lo << " < " << name << " <= " << iv.hi;
    else if (has_hi)
      out << name << " <= " << iv.hi;
    else
      out << name << " > " << iv.lo;
  }
  return out.str();
}

}  // namespace mlm
