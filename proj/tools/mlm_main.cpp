#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mlm/dataset.hpp"
#include "mlm/interpret.hpp"
#include "mlm/metrics.hpp"
#include "mlm/model_io.hpp"
#include "mlm/pipeline.hpp"
#include "mlm/reports.hpp"

namespace fs = std::filesystem;

namespace {

int log_level() {
  const char* env = std::getenv("MLM_LOG");
  if (!env) return 1;
  std::string v(env);
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[mlm] " << msg << '\n';
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string out_dir = ".";
  long seed = -1;
};

mlm::PipelineConfig load_config(const CommonOpts& opts) {
  mlm::PipelineConfig cfg = mlm::PipelineConfig::from_file(opts.config_path);
  for (const auto& kv : opts.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw mlm::MlmError(mlm::Err::ConfigError,
                          "--set expects key=value, got '" + kv + "'");
    cfg.apply_override(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw mlm::MlmError(mlm::Err::ConfigError,
                        "cannot write file: " + path.string());
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

int cmd_train(const CommonOpts& opts) {
  mlm::PipelineConfig cfg = load_config(opts);
  fs::create_directories(opts.out_dir);

  std::optional<mlm::Dataset> holdout;
  mlm::TrainedArtifact art = mlm::train_pipeline(cfg, &holdout);
  for (const auto& w : art.warnings) std::cerr << "[mlm] warning: " << w << '\n';

  fs::path out(opts.out_dir);
  mlm::save_model(art, (out / "model.json").string());
  write_text(out / "report.json", mlm::run_report_json(art));
  mlm::write_cell_assignments_csv((out / "assignments.csv").string(), art);
  mlm::write_loss_curve_csv((out / "loss_curve.csv").string(),
                            art.mlp.train_loss);
  mlm::write_epic_summary_csv((out / "epics.csv").string(), art.mlm);
  mlm::write_coefficient_csv((out / "coefficients.csv").string(), art, 0.95);

  if (holdout) {
    mlm::TrainMetrics test = mlm::evaluate_artifact(art, holdout->x, holdout->y);
    write_text(out / "holdout_metrics.json",
               mlm::evaluate_report_json(art, test));
  }

  log_info("trained: " + std::to_string(art.partition.cell_count()) +
           " cells, " + std::to_string(art.mlm.epic_count()) + " EPICs");
  std::cout << mlm::run_report_json(art) << '\n';
  return 0;
}

int cmd_cv_k(const CommonOpts& opts, const std::vector<int>& grid, int folds) {
  mlm::PipelineConfig cfg = load_config(opts);
  mlm::CvResult result = mlm::cv_k(cfg, grid, folds);
  fs::create_directories(opts.out_dir);
  write_text(fs::path(opts.out_dir) / "cv_k.json", mlm::cv_result_json(result));
  std::cout << mlm::cv_result_json(result) << '\n';
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& mode, bool with_gamma,
                const std::string& out_path) {
  mlm::TrainedArtifact art = mlm::load_model(model_path);
  mlm::RawTable table = mlm::read_csv_table(input_path);
  Eigen::VectorXd y;
  Eigen::MatrixXd x = mlm::assemble_features(table, art.schema, &y, false);

  Eigen::VectorXd pred = mode == "hard"
                             ? mlm::predict_hard_rows(art.mlm, x)
                             : mlm::predict_soft_rows(art.mlm, x);
  Eigen::MatrixXd gammas;
  if (with_gamma) gammas = mlm::epic_posteriors_rows(art.mlm, x);

  mlm::write_predictions_csv(out_path, art.config.task, pred,
                             with_gamma ? &gammas : nullptr);
  log_info("wrote " + std::to_string(pred.size()) + " predictions to " +
           out_path);
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& test_path,
                 const std::string& out_path) {
  mlm::TrainedArtifact art = mlm::load_model(model_path);
  mlm::RawTable table = mlm::read_csv_table(test_path);
  Eigen::VectorXd y;
  Eigen::MatrixXd x = mlm::assemble_features(table, art.schema, &y, true);

  mlm::TrainMetrics test = mlm::evaluate_artifact(art, x, y);
  std::string report = mlm::evaluate_report_json(art, test);
  if (!out_path.empty()) write_text(out_path, report);
  std::cout << report << '\n';
  return 0;
}

int cmd_explain(const std::string& model_path, const std::string& method,
                const std::string& epic_arg, double xi, double psi, long eta,
                const std::string& out_dir) {
  mlm::TrainedArtifact art = mlm::load_model(model_path);
  fs::create_directories(out_dir);
  fs::path out(out_dir);

  const int j_count = art.mlm.epic_count();
  std::vector<int> epic_ids;
  if (epic_arg == "all") {
    for (int j = 0; j < j_count; ++j) epic_ids.push_back(j);
  } else {
    int j = std::stoi(epic_arg) - 1;  // user-facing ids are 1-based
    if (j < 0 || j >= j_count)
      throw mlm::MlmError(mlm::Err::UnknownEpic,
                          "epic " + epic_arg + " does not exist (model has " +
                              std::to_string(j_count) + ")");
    epic_ids.push_back(j);
  }

  // Interpretation runs on the stored training data, original units.
  mlm::Dataset train;
  train.task = art.config.task;
  train.x = art.train_x;
  train.y = art.train_y;
  train.feature_names = art.schema.feature_names;
  train.column_kinds = art.schema.column_kinds;

  double use_xi = xi > 0 ? xi : art.config.xi;
  double use_psi = psi > 0 ? psi : art.config.psi;
  int use_eta = eta >= 0 ? static_cast<int>(eta) : art.config.eta;

  mlm::write_coefficient_csv((out / "coefficients.csv").string(), art, 0.95);

  if (method == "lds") {
    for (int j : epic_ids) {
      mlm::ExplainableDims dims =
          mlm::explainable_dimensions(art.mlm, train, j, use_xi);
      write_text(out / ("lds_epic_" + std::to_string(j + 1) + ".json"),
                 mlm::lds_report_json(dims, art.schema.feature_names));
      if (!dims.dims.empty()) {
        std::vector<int> plot_dims(
            dims.dims.begin(),
            dims.dims.begin() + std::min<size_t>(dims.dims.size(), 2));
        mlm::write_marginal_curves_csv(
            (out / ("lds_curves_epic_" + std::to_string(j + 1) + ".csv"))
                .string(),
            art, plot_dims, 101);
        mlm::write_density_svg(
            (out / ("lds_epic_" + std::to_string(j + 1) + ".svg")).string(),
            art, plot_dims.front(), 101);
      }
      log_info("LDS epic " + std::to_string(j + 1) +
               (dims.found ? ": rate " + std::to_string(dims.rate)
                           : ": no valid subset (failure declared)"));
    }
  } else if (method == "pr") {
    std::string text_all;
    for (int j : epic_ids) {
      auto conditions =
          mlm::explain_epic_pr(art.mlm, train, j, use_psi, use_eta);
      int epic_size = art.mlm.epics[static_cast<size_t>(j)].size;
      write_text(out / ("conditions_epic_" + std::to_string(j + 1) + ".json"),
                 mlm::conditions_report_json(conditions,
                                             art.schema.feature_names,
                                             art.schema.column_kinds,
                                             epic_size));
      text_all += mlm::conditions_text_table(conditions,
                                             art.schema.feature_names,
                                             art.schema.column_kinds, j,
                                             epic_size);
    }
    write_text(out / "conditions.txt", text_all);
    std::cout << text_all;
  } else {
    throw mlm::MlmError(mlm::Err::ConfigError,
                        "method must be lds or pr, got '" + method + "'");
  }

  for (int j : epic_ids)
    mlm::write_coefficient_svg(
        (out / ("coefficients_epic_" + std::to_string(j + 1) + ".svg"))
            .string(),
        art, j, 0.95);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture of linear models co-supervised by a neural network"};
  app.require_subcommand(1);

  CommonOpts common;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", common.config_path, "config file")
          ->required();
    sub->add_option("--set", common.overrides,
                    "override a config key (key=value, repeatable)");
    sub->add_option("--seed", common.seed, "override the config seed");
    sub->add_option("--out", common.out_dir, "output directory");
  };

  auto* train = app.add_subcommand("train", "train an MLM end to end");
  add_common(train, true);

  auto* cvk = app.add_subcommand("cv-k", "cross-validate the layer cell count");
  add_common(cvk, true);
  std::vector<int> grid;
  int folds = 5;
  cvk->add_option("--grid", grid, "candidate K values")
      ->required()
      ->delimiter(',');
  cvk->add_option("--folds", folds, "number of folds");

  auto* predict = app.add_subcommand("predict", "score a CSV with a model");
  std::string model_path, input_path, mode = "soft", pred_out = "predictions.csv";
  bool with_gamma = false;
  predict->add_option("--model", model_path, "model document")->required();
  predict->add_option("--input", input_path, "input CSV")->required();
  predict->add_option("--mode", mode, "soft or hard")
      ->check(CLI::IsMember({"soft", "hard"}));
  predict->add_flag("--gamma", with_gamma, "emit per-EPIC posteriors");
  predict->add_option("--out", pred_out, "output CSV path");

  auto* evaluate = app.add_subcommand("evaluate", "compute test metrics");
  std::string eval_model, eval_test, eval_out;
  evaluate->add_option("--model", eval_model, "model document")->required();
  evaluate->add_option("--test", eval_test, "labeled test CSV")->required();
  evaluate->add_option("--out", eval_out, "also write the report here");

  auto* explain = app.add_subcommand("explain", "interpret the EPICs");
  std::string exp_model, method, epic_arg = "all", exp_out = "explain";
  double xi = -1, psi = -1;
  long eta = -1;
  explain->add_option("--model", exp_model, "model document")->required();
  explain->add_option("--method", method, "lds or pr")
      ->required()
      ->check(CLI::IsMember({"lds", "pr"}));
  explain->add_option("--epic", epic_arg, "EPIC id (1-based) or 'all'");
  explain->add_option("--xi", xi, "LDS rate threshold override");
  explain->add_option("--psi", psi, "PR purity override");
  explain->add_option("--eta", eta, "PR minimum size override");
  explain->add_option("--out", exp_out, "output directory");

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(common);
    if (cvk->parsed()) return cmd_cv_k(common, grid, folds);
    if (predict->parsed())
      return cmd_predict(model_path, input_path, mode, with_gamma, pred_out);
    if (evaluate->parsed()) return cmd_evaluate(eval_model, eval_test, eval_out);
    if (explain->parsed())
      return cmd_explain(exp_model, method, epic_arg, xi, psi, eta, exp_out);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const mlm::MlmError& e) {
    std::cerr << "error [" << mlm::err_name(e.kind()) << "]: " << e.what()
              << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
