#include "mlm/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mlm/errors.hpp"

namespace mlm {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream stream(s);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t at = 0;
    long v = std::stol(value, &at);
    if (at != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw MlmError(Err::ConfigError,
                   "config key '" + key + "' expects an integer, got '" +
                       value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    size_t at = 0;
    double v = std::stod(value, &at);
    if (at != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw MlmError(Err::ConfigError, "config key '" + key +
                                         "' expects a number, got '" + value +
                                         "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw MlmError(Err::ConfigError,
                 "config key '" + key + "' expects a boolean, got '" + value +
                     "'");
}

}  // namespace

std::string task_name(Task task) {
  return task == Task::Regression ? "regression" : "classification";
}

std::string cov_kind_name(CovKind kind) {
  switch (kind) {
    case CovKind::Full: return "full";
    case CovKind::Diagonal: return "diagonal";
    case CovKind::Spherical: return "spherical";
    case CovKind::Pooled: return "pooled";
  }
  return "full";
}

std::string activation_name(Activation act) {
  switch (act) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "relu";
}

Task parse_task(const std::string& s) {
  if (s == "regression") return Task::Regression;
  if (s == "classification") return Task::BinaryClassification;
  throw MlmError(Err::ConfigError,
                 "task must be regression or classification, got '" + s + "'");
}

CovKind parse_cov_kind(const std::string& s) {
  if (s == "full") return CovKind::Full;
  if (s == "diagonal") return CovKind::Diagonal;
  if (s == "spherical") return CovKind::Spherical;
  if (s == "pooled") return CovKind::Pooled;
  throw MlmError(Err::ConfigError, "unknown cov_kind '" + s + "'");
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw MlmError(Err::ConfigError, "unknown activation '" + s + "'");
}

void PipelineConfig::apply_override(const std::string& key,
                                    const std::string& value) {
  if (key == "data") data = value;
  else if (key == "target") target = value;
  else if (key == "task") task = parse_task(value);
  else if (key == "nominal") nominal = split_list(value);
  else if (key == "standardize") standardize = parse_bool(key, value);
  else if (key == "test_fraction") test_fraction = parse_real(key, value);
  else if (key == "widths") {
    widths.clear();
    for (const auto& w : split_list(value))
      widths.push_back(static_cast<int>(parse_int(key, w)));
  } else if (key == "epochs") epochs = static_cast<int>(parse_int(key, value));
  else if (key == "batch_size") batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "learning_rate") learning_rate = parse_real(key, value);
  else if (key == "activation") activation = parse_activation(value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "k_per_layer") k_per_layer = static_cast<int>(parse_int(key, value));
  else if (key == "epics") epics = static_cast<int>(parse_int(key, value));
  else if (key == "m") m = static_cast<int>(parse_int(key, value));
  else if (key == "epsilon") epsilon = parse_real(key, value);
  else if (key == "perturb_dummies") perturb_dummies = parse_bool(key, value);
  else if (key == "lasso_alpha") lasso_alpha = parse_real(key, value);
  else if (key == "cov_kind") cov_kind = parse_cov_kind(value);
  else if (key == "xi") xi = parse_real(key, value);
  else if (key == "psi") psi = parse_real(key, value);
  else if (key == "eta") eta = static_cast<int>(parse_int(key, value));
  else
    throw MlmError(Err::ConfigError, "unknown config key '" + key + "'");
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw MlmError(Err::ConfigError, "cannot open config file: " + path);
  PipelineConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw MlmError(Err::ConfigError,
                     "config line " + std::to_string(line_no) +
                         " is not 'key = value': " + line);
    cfg.apply_override(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void PipelineConfig::validate() const {
  if (data.empty()) throw MlmError(Err::ConfigError, "config needs 'data'");
  if (target.empty()) throw MlmError(Err::ConfigError, "config needs 'target'");
  if (widths.empty())
    throw MlmError(Err::ConfigError, "widths must be non-empty");
  for (int w : widths)
    if (w < 1) throw MlmError(Err::ConfigError, "widths must be >= 1");
  if (epochs < 1) throw MlmError(Err::ConfigError, "epochs must be >= 1");
  if (batch_size < 1)
    throw MlmError(Err::ConfigError, "batch_size must be >= 1");
  if (learning_rate < 0)
    throw MlmError(Err::ConfigError, "learning_rate must be >= 0");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw MlmError(Err::ConfigError, "test_fraction must lie in [0,1)");
  if (k_per_layer < 1)
    throw MlmError(Err::ConfigError, "k_per_layer must be >= 1");
  if (epics < 0) throw MlmError(Err::ConfigError, "epics must be >= 0");
  if (m < 0) throw MlmError(Err::ConfigError, "m must be >= 0");
  if (epsilon < 0) throw MlmError(Err::ConfigError, "epsilon must be >= 0");
  if (lasso_alpha < 0)
    throw MlmError(Err::ConfigError, "lasso_alpha must be >= 0");
  if (!(xi > 0.0 && xi < 1.0))
    throw MlmError(Err::ConfigError, "xi must lie in (0,1)");
  if (!(psi > 0.0 && psi <= 1.0))
    throw MlmError(Err::ConfigError, "psi must lie in (0,1]");
  if (eta < 0) throw MlmError(Err::ConfigError, "eta must be >= 0");
}

}  // namespace mlm
