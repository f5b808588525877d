#include "mlm/model_io.hpp"

#include <fstream>

#include <json.hpp>

namespace mlm {

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vec_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (size_t i = 0; i < arr.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = arr.at(i).get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  json out;
  out["cols"] = m.cols();
  out["rows"] = std::move(rows);
  return out;
}

Eigen::MatrixXd mat_from_json(const json& obj) {
  const auto& rows = obj.at("rows");
  auto cols = obj.at("cols").get<Eigen::Index>();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows.at(r);
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw MlmError(Err::CorruptDocument, "ragged matrix in document");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), c) =
          row.at(static_cast<size_t>(c)).get<double>();
  }
  return m;
}

json linear_model_to_json(const LinearModel& m) {
  json out;
  out["intercept"] = m.intercept;
  out["coefficients"] = vec_to_json(m.coefficients);
  out["task"] = task_name(m.task);
  out["lasso_alpha"] = m.lasso_alpha;
  out["residual_df"] = m.residual_df;
  out["ridge_fallback"] = m.ridge_fallback;
  out["converged"] = m.converged;
  if (m.coef_stderr) out["coef_stderr"] = vec_to_json(*m.coef_stderr);
  if (m.intercept_stderr) out["intercept_stderr"] = *m.intercept_stderr;
  return out;
}

LinearModel linear_model_from_json(const json& obj) {
  LinearModel m;
  m.intercept = obj.at("intercept").get<double>();
  m.coefficients = vec_from_json(obj.at("coefficients"));
  m.task = parse_task(obj.at("task").get<std::string>());
  m.lasso_alpha = obj.at("lasso_alpha").get<double>();
  m.residual_df = obj.at("residual_df").get<long>();
  m.ridge_fallback = obj.at("ridge_fallback").get<bool>();
  m.converged = obj.at("converged").get<bool>();
  if (obj.contains("coef_stderr"))
    m.coef_stderr = vec_from_json(obj.at("coef_stderr"));
  if (obj.contains("intercept_stderr"))
    m.intercept_stderr = obj.at("intercept_stderr").get<double>();
  return m;
}

json gmm_to_json(const Gmm& g) {
  json out;
  out["k"] = g.k;
  out["priors"] = vec_to_json(g.priors);
  json means = json::array();
  for (const auto& mu : g.means) means.push_back(vec_to_json(mu));
  out["means"] = std::move(means);
  json covs = json::array();
  for (const auto& cov : g.covariances) covs.push_back(mat_to_json(cov));
  out["covariances"] = std::move(covs);
  out["cov_kind"] = cov_kind_name(g.cov_kind);
  out["log_likelihood"] = g.log_likelihood;
  out["degenerate_flagged"] = g.degenerate_flagged;
  return out;
}

Gmm gmm_from_json(const json& obj) {
  Gmm g;
  g.k = obj.at("k").get<int>();
  g.priors = vec_from_json(obj.at("priors"));
  for (const auto& mu : obj.at("means")) g.means.push_back(vec_from_json(mu));
  for (const auto& cov : obj.at("covariances"))
    g.covariances.push_back(mat_from_json(cov));
  g.cov_kind = parse_cov_kind(obj.at("cov_kind").get<std::string>());
  g.log_likelihood = obj.at("log_likelihood").get<double>();
  g.degenerate_flagged = obj.at("degenerate_flagged").get<bool>();
  if (static_cast<int>(g.means.size()) != g.k ||
      static_cast<int>(g.covariances.size()) != g.k ||
      g.priors.size() != g.k)
    throw MlmError(Err::CorruptDocument, "inconsistent mixture block");
  return g;
}

json config_to_json(const PipelineConfig& c) {
  json out;
  out["data"] = c.data;
  out["target"] = c.target;
  out["task"] = task_name(c.task);
  out["nominal"] = c.nominal;
  out["standardize"] = c.standardize;
  out["test_fraction"] = c.test_fraction;
  out["widths"] = c.widths;
  out["epochs"] = c.epochs;
  out["batch_size"] = c.batch_size;
  out["learning_rate"] = c.learning_rate;
  out["activation"] = activation_name(c.activation);
  out["seed"] = c.seed;
  out["k_per_layer"] = c.k_per_layer;
  out["epics"] = c.epics;
  out["m"] = c.m;
  out["epsilon"] = c.epsilon;
  out["perturb_dummies"] = c.perturb_dummies;
  out["lasso_alpha"] = c.lasso_alpha;
  out["cov_kind"] = cov_kind_name(c.cov_kind);
  out["xi"] = c.xi;
  out["psi"] = c.psi;
  out["eta"] = c.eta;
  return out;
}

PipelineConfig config_from_json(const json& obj) {
  PipelineConfig c;
  c.data = obj.at("data").get<std::string>();
  c.target = obj.at("target").get<std::string>();
  c.task = parse_task(obj.at("task").get<std::string>());
  c.nominal = obj.at("nominal").get<std::vector<std::string>>();
  c.standardize = obj.at("standardize").get<bool>();
  c.test_fraction = obj.at("test_fraction").get<double>();
  c.widths = obj.at("widths").get<std::vector<int>>();
  c.epochs = obj.at("epochs").get<int>();
  c.batch_size = obj.at("batch_size").get<int>();
  c.learning_rate = obj.at("learning_rate").get<double>();
  c.activation = parse_activation(obj.at("activation").get<std::string>());
  c.seed = obj.at("seed").get<std::uint64_t>();
  c.k_per_layer = obj.at("k_per_layer").get<int>();
  c.epics = obj.at("epics").get<int>();
  c.m = obj.at("m").get<int>();
  c.epsilon = obj.at("epsilon").get<double>();
  c.perturb_dummies = obj.at("perturb_dummies").get<bool>();
  c.lasso_alpha = obj.at("lasso_alpha").get<double>();
  c.cov_kind = parse_cov_kind(obj.at("cov_kind").get<std::string>());
  c.xi = obj.at("xi").get<double>();
  c.psi = obj.at("psi").get<double>();
  c.eta = obj.at("eta").get<int>();
  return c;
}

json schema_to_json(const DataSchema& s) {
  json out;
  out["numeric_columns"] = s.numeric_columns;
  json encs = json::array();
  for (const auto& e : s.encodings) {
    json enc;
    enc["name"] = e.name;
    enc["levels"] = e.levels;
    encs.push_back(std::move(enc));
  }
  out["encodings"] = std::move(encs);
  out["feature_names"] = s.feature_names;
  json kinds = json::array();
  for (auto k : s.column_kinds)
    kinds.push_back(k == ColumnKind::Continuous ? "continuous" : "dummy");
  out["column_kinds"] = std::move(kinds);
  out["target"] = s.target;
  out["task"] = task_name(s.task);
  return out;
}

DataSchema schema_from_json(const json& obj) {
  DataSchema s;
  s.numeric_columns =
      obj.at("numeric_columns").get<std::vector<std::string>>();
  for (const auto& enc : obj.at("encodings")) {
    NominalEncoding e;
    e.name = enc.at("name").get<std::string>();
    e.levels = enc.at("levels").get<std::vector<std::string>>();
    s.encodings.push_back(std::move(e));
  }
  s.feature_names = obj.at("feature_names").get<std::vector<std::string>>();
  for (const auto& k : obj.at("column_kinds"))
    s.column_kinds.push_back(k.get<std::string>() == "continuous"
                                 ? ColumnKind::Continuous
                                 : ColumnKind::BinaryDummy);
  s.target = obj.at("target").get<std::string>();
  s.task = parse_task(obj.at("task").get<std::string>());
  return s;
}

json scaler_to_json(const Scaler& s) {
  json out;
  out["means"] = vec_to_json(s.means);
  out["stds"] = vec_to_json(s.stds);
  out["scaled"] = s.scaled;
  out["zero_variance"] = s.zero_variance;
  return out;
}

Scaler scaler_from_json(const json& obj) {
  Scaler s;
  s.means = vec_from_json(obj.at("means"));
  s.stds = vec_from_json(obj.at("stds"));
  s.scaled = obj.at("scaled").get<std::vector<bool>>();
  s.zero_variance = obj.at("zero_variance").get<std::vector<bool>>();
  return s;
}

}  // namespace

std::string model_to_json(const TrainedArtifact& artifact) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["config"] = config_to_json(artifact.config);
  doc["schema"] = schema_to_json(artifact.schema);

  json mlp;
  mlp["activation"] = activation_name(artifact.mlp.activation);
  mlp["output_link"] =
      artifact.mlp.output_link == OutputLink::Sigmoid ? "sigmoid" : "linear";
  json weights = json::array();
  for (const auto& w : artifact.mlp.weights) weights.push_back(mat_to_json(w));
  mlp["weights"] = std::move(weights);
  json biases = json::array();
  for (const auto& b : artifact.mlp.biases) biases.push_back(vec_to_json(b));
  mlp["biases"] = std::move(biases);
  mlp["train_loss"] = artifact.mlp.train_loss;
  doc["mlp"] = std::move(mlp);

  json layers;
  layers["k_per_layer"] = artifact.layers.k_per_layer;
  json gmms = json::array();
  for (const auto& g : artifact.layers.per_layer)
    gmms.push_back(gmm_to_json(g));
  layers["per_layer"] = std::move(gmms);
  doc["layer_cells"] = std::move(layers);

  json part;
  json cos = json::array();
  for (Eigen::Index i = 0; i < artifact.partition.cell_of_sample.size(); ++i)
    cos.push_back(artifact.partition.cell_of_sample[i]);
  part["cell_of_sample"] = std::move(cos);
  part["sequence_of_cell"] = artifact.partition.sequence_of_cell;
  part["cell_counts"] = artifact.partition.cell_counts;
  part["total_sequences"] = artifact.partition.total_sequences;
  doc["partition"] = std::move(part);

  json mlm;
  json epics = json::array();
  for (const auto& e : artifact.mlm.epics) {
    json epic;
    epic["local_model"] = linear_model_to_json(e.local_model);
    epic["density"] = gmm_to_json(e.density);
    epic["prior"] = e.prior;
    epic["member_cells"] = e.member_cells;
    epic["size"] = e.size;
    epics.push_back(std::move(epic));
  }
  mlm["epics"] = std::move(epics);
  mlm["scaler"] = scaler_to_json(artifact.mlm.scaler);
  mlm["task"] = task_name(artifact.mlm.task);
  json zetas = json::array();
  for (Eigen::Index i = 0; i < artifact.mlm.train_epic_labels.size(); ++i)
    zetas.push_back(artifact.mlm.train_epic_labels[i]);
  mlm["train_epic_labels"] = std::move(zetas);
  mlm["lasso_alpha"] = artifact.mlm.lasso_alpha;
  mlm["density_cov_kind"] = cov_kind_name(artifact.mlm.density_cov_kind);
  doc["mlm"] = std::move(mlm);

  doc["train_data"]["x"] = mat_to_json(artifact.train_x);
  doc["train_data"]["y"] = vec_to_json(artifact.train_y);

  json metrics;
  metrics["rmse"] = artifact.train_metrics.rmse;
  metrics["auc"] = artifact.train_metrics.auc;
  metrics["f1"] = artifact.train_metrics.f1;
  doc["train_metrics"] = std::move(metrics);
  doc["warnings"] = artifact.warnings;

  return doc.dump(2);
}

TrainedArtifact model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw MlmError(Err::CorruptDocument,
                   std::string("cannot parse model document: ") + e.what());
  }

  if (!doc.contains("format_version"))
    throw MlmError(Err::CorruptDocument, "missing format_version");
  int version = -1;
  try {
    version = doc.at("format_version").get<int>();
  } catch (const json::exception&) {
    throw MlmError(Err::CorruptDocument, "bad format_version");
  }
  if (version != kModelFormatVersion)
    throw MlmError(Err::VersionMismatch,
                   "unsupported model format version " +
                       std::to_string(version) + " (expected " +
                       std::to_string(kModelFormatVersion) + ")");

  try {
    TrainedArtifact art;
    art.config = config_from_json(doc.at("config"));
    art.schema = schema_from_json(doc.at("schema"));

    const auto& mlp = doc.at("mlp");
    art.mlp.activation =
        parse_activation(mlp.at("activation").get<std::string>());
    art.mlp.output_link =
        mlp.at("output_link").get<std::string>() == "sigmoid"
            ? OutputLink::Sigmoid
            : OutputLink::Linear;
    for (const auto& w : mlp.at("weights"))
      art.mlp.weights.push_back(mat_from_json(w));
    for (const auto& b : mlp.at("biases"))
      art.mlp.biases.push_back(vec_from_json(b));
    art.mlp.train_loss = mlp.at("train_loss").get<std::vector<double>>();

    const auto& layers = doc.at("layer_cells");
    art.layers.k_per_layer = layers.at("k_per_layer").get<std::vector<int>>();
    for (const auto& g : layers.at("per_layer"))
      art.layers.per_layer.push_back(gmm_from_json(g));

    const auto& part = doc.at("partition");
    const auto& cos = part.at("cell_of_sample");
    art.partition.cell_of_sample.resize(static_cast<Eigen::Index>(cos.size()));
    for (size_t i = 0; i < cos.size(); ++i)
      art.partition.cell_of_sample[static_cast<Eigen::Index>(i)] =
          cos.at(i).get<int>();
    art.partition.sequence_of_cell =
        part.at("sequence_of_cell").get<std::vector<std::vector<int>>>();
    art.partition.cell_counts = part.at("cell_counts").get<std::vector<int>>();
    art.partition.total_sequences =
        part.at("total_sequences").get<std::uint64_t>();

    const auto& mlm = doc.at("mlm");
    for (const auto& e : mlm.at("epics")) {
      Epic epic;
      epic.local_model = linear_model_from_json(e.at("local_model"));
      epic.density = gmm_from_json(e.at("density"));
      epic.prior = e.at("prior").get<double>();
      epic.member_cells = e.at("member_cells").get<std::vector<int>>();
      epic.size = e.at("size").get<int>();
      art.mlm.epics.push_back(std::move(epic));
    }
    art.mlm.scaler = scaler_from_json(mlm.at("scaler"));
    art.mlm.task = parse_task(mlm.at("task").get<std::string>());
    const auto& zetas = mlm.at("train_epic_labels");
    art.mlm.train_epic_labels.resize(static_cast<Eigen::Index>(zetas.size()));
    for (size_t i = 0; i < zetas.size(); ++i)
      art.mlm.train_epic_labels[static_cast<Eigen::Index>(i)] =
          zetas.at(i).get<int>();
    art.mlm.lasso_alpha = mlm.at("lasso_alpha").get<double>();
    art.mlm.density_cov_kind =
        parse_cov_kind(mlm.at("density_cov_kind").get<std::string>());

    art.train_x = mat_from_json(doc.at("train_data").at("x"));
    art.train_y = vec_from_json(doc.at("train_data").at("y"));

    const auto& metrics = doc.at("train_metrics");
    art.train_metrics.rmse = metrics.at("rmse").get<double>();
    art.train_metrics.auc = metrics.at("auc").get<double>();
    art.train_metrics.f1 = metrics.at("f1").get<double>();
    art.warnings = doc.at("warnings").get<std::vector<std::string>>();
    return art;
  } catch (const json::exception& e) {
    throw MlmError(Err::CorruptDocument,
                   std::string("malformed model document: ") + e.what());
  }
}

void save_model(const TrainedArtifact& artifact, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MlmError(Err::ConfigError, "cannot write model to " + path);
  out << model_to_json(artifact) << '\n';
}

TrainedArtifact load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw MlmError(Err::CorruptDocument, "cannot open model file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return model_from_json(text);
}

}  // namespace mlm
