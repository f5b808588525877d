#ifndef MLM_INTERPRET_HPP
#define MLM_INTERPRET_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "mlm/dataset.hpp"
#include "mlm/mixture.hpp"

namespace mlm {

/// Result of the greedy explainable-dimension search for one EPIC.
struct ExplainableDims {
  int epic = 0;
  std::vector<int> dims;          // s*_j in selection order
  double rate = 0.0;              // F1 achieved (the explainable rate)
  double xi = 0.0;
  bool found = false;
  std::vector<double> step_rates;  // best F1 after each accepted variable
};

struct TreeNode {
  int split_var = -1;       // -1 marks a leaf
  double threshold = 0.0;   // "<= threshold" goes left
  int left = -1;
  int right = -1;
  int depth = 0;
  std::vector<int> samples;  // u(e), row indices
  int class1 = 0;

  bool is_leaf() const { return split_var < 0; }
  int size() const { return static_cast<int>(samples.size()); }
  double purity() const {
    return samples.empty() ? 0.0
                           : static_cast<double>(class1) / samples.size();
  }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  // Split convention fixes the shape to (lo, hi].
  bool contains(double v) const { return v > lo && v <= hi; }
  bool is_trivial() const { return !std::isfinite(lo) && !std::isfinite(hi); }
};

struct ExplainableCondition {
  int epic = 0;
  std::map<int, Interval> intervals;  // variable index -> region
  int covered = 0;                    // leaf size
  double purity = 0.0;
  int depth = 0;
  std::vector<int> rows;              // u(leaf)
};

/// One-vs-rest MAP on the marginal densities of the subset s:
/// 1 iff pi~_j f_{P_j,s}(x_[s]) >= sum_{j' != j} pi~_j' f_{P_j',s}(x_[s]).
/// x is in standardized coordinates.
int marginal_map_classify(const MlmModel& model, int j,
                          const std::vector<int>& s,
                          const Eigen::VectorXd& x_std);

/// Greedy forward selection of explainable dimensions: while the F1 rate
/// stays <= xi and variables remain, add the single variable whose
/// marginal MAP classification of the training points scores best.
/// train is in original units; the model's scaler is applied internally.
ExplainableDims explainable_dimensions(const MlmModel& model,
                                       const Dataset& train, int j, double xi);

/// Fully grown CART with Gini impurity: leaves are pure, singletons, or
/// sets of identical rows. Thresholds sit at midpoints of consecutive
/// distinct values; ties prefer the lowest variable index, then the lowest
/// threshold.
DecisionTree grow_tree(const Eigen::MatrixXd& x, const std::vector<int>& q);

/// Top-down scan: the first node on each path whose class-1 fraction
/// reaches psi becomes a leaf; returns ids of such leaves with size > eta.
std::vector<int> prune_explainable(const DecisionTree& tree, double psi,
                                   int eta);

/// Intersects the split conditions along the root-to-leaf path into one
/// interval per variable.
ExplainableCondition path_to_condition(const DecisionTree& tree, int leaf_id);

/// grow -> prune -> conditions for EPIC j, sorted by covered size
/// descending. train is in original units so thresholds read naturally.
std::vector<ExplainableCondition> explain_epic_pr(const MlmModel& model,
                                                  const Dataset& train, int j,
                                                  double psi, int eta);

/// Renders a condition in the style of the paper's tables; dummy columns
/// "origin:level" print as origin = level / origin != level.
std::string render_condition(const ExplainableCondition& cond,
                             const std::vector<std::string>& feature_names,
                             const std::vector<ColumnKind>& column_kinds);

}  // namespace mlm

#endif  // MLM_INTERPRET_HPP
