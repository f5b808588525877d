#ifndef MLM_CONFIG_HPP
#define MLM_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mlm/dataset.hpp"
#include "mlm/gmm.hpp"
#include "mlm/mlp.hpp"

namespace mlm {

/// One key-value config file drives every command; flags override file
/// values. Unknown keys are rejected.
struct PipelineConfig {
  std::string data;
  std::string target;
  Task task = Task::Regression;
  std::vector<std::string> nominal;   // columns forced nominal
  bool standardize = true;
  double test_fraction = 0.0;         // 0 trains on every row

  std::vector<int> widths = {16, 16};
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 0.05;
  Activation activation = Activation::ReLU;
  std::uint64_t seed = 1;

  int k_per_layer = 4;                // K_l, shared across layers
  int epics = 0;                      // J~; 0 keeps every cell (MLM-cell)
  int m = 100;                        // simulated points per cell
  double epsilon = 0.1;               // perturbation variance
  bool perturb_dummies = true;
  double lasso_alpha = 0.0;
  CovKind cov_kind = CovKind::Full;   // per-EPIC density structure

  double xi = 0.8;                    // LDS rate threshold
  double psi = 1.0;                   // PR purity
  int eta = 4;                        // PR minimum leaf size

  static PipelineConfig from_file(const std::string& path);
  void apply_override(const std::string& key, const std::string& value);
  void validate() const;
};

std::string task_name(Task task);
std::string cov_kind_name(CovKind kind);
std::string activation_name(Activation act);
Task parse_task(const std::string& s);
CovKind parse_cov_kind(const std::string& s);
Activation parse_activation(const std::string& s);

}  // namespace mlm

#endif  // MLM_CONFIG_HPP
