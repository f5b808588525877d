#include "mlm/reports.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace mlm {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MlmError(Err::ConfigError, "cannot write file: " + path);
  return out;
}

json metrics_json(Task task, const TrainMetrics& m) {
  json out;
  if (task == Task::Regression) {
    out["rmse"] = m.rmse;
  } else {
    out["auc"] = m.auc;
    out["f1"] = m.f1;
  }
  return out;
}

json interval_json(const Interval& iv) {
  json out;
  if (std::isfinite(iv.lo)) out["gt"] = iv.lo;
  if (std::isfinite(iv.hi)) out["le"] = iv.hi;
  return out;
}

}  // namespace

std::string run_report_json(const TrainedArtifact& artifact) {
  json doc;
  doc["cells"] = artifact.partition.cell_count();
  doc["total_sequences"] = artifact.partition.total_sequences;
  doc["epics"] = artifact.mlm.epic_count();
  json sizes = json::array();
  json priors = json::array();
  for (const auto& e : artifact.mlm.epics) {
    sizes.push_back(e.size);
    priors.push_back(e.prior);
  }
  doc["epic_sizes"] = std::move(sizes);
  doc["epic_priors"] = std::move(priors);
  doc["cell_counts"] = artifact.partition.cell_counts;
  doc["train_metrics"] =
      metrics_json(artifact.config.task, artifact.train_metrics);
  doc["warnings"] = artifact.warnings;
  doc["seed"] = artifact.config.seed;
  return doc.dump(2);
}

void write_predictions_csv(const std::string& path, Task task,
                           const Eigen::VectorXd& predictions,
                           const Eigen::MatrixXd* gammas) {
  auto out = open_out(path);
  out << std::setprecision(17);
  out << "row";
  if (task == Task::Regression) out << ",prediction";
  else out << ",probability,label";
  if (gammas)
    for (Eigen::Index j = 0; j < gammas->cols(); ++j) out << ",gamma_" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < predictions.size(); ++i) {
    out << (i + 1);
    if (task == Task::Regression) {
      out << ',' << predictions[i];
    } else {
      out << ',' << predictions[i] << ',' << (predictions[i] >= 0.5 ? 1 : 0);
    }
    if (gammas)
      for (Eigen::Index j = 0; j < gammas->cols(); ++j)
        out << ',' << (*gammas)(i, j);
    out << '\n';
  }
}

void write_cell_assignments_csv(const std::string& path,
                                const TrainedArtifact& artifact) {
  auto out = open_out(path);
  out << "row,cell,epic\n";
  for (Eigen::Index i = 0; i < artifact.partition.cell_of_sample.size(); ++i) {
    out << (i + 1) << ',' << (artifact.partition.cell_of_sample[i] + 1) << ','
        << (artifact.mlm.train_epic_labels[i] + 1) << '\n';
  }
}

void write_loss_curve_csv(const std::string& path,
                          const std::vector<double>& losses) {
  auto out = open_out(path);
  out << std::setprecision(17);
  out << "epoch,loss\n";
  for (size_t i = 0; i < losses.size(); ++i)
    out << (i + 1) << ',' << losses[i] << '\n';
}

void write_epic_summary_csv(const std::string& path, const MlmModel& model) {
  auto out = open_out(path);
  out << std::setprecision(17);
  out << "epic,size,prior,member_cells\n";
  for (int j = 0; j < model.epic_count(); ++j) {
    const auto& e = model.epics[static_cast<size_t>(j)];
    out << (j + 1) << ',' << e.size << ',' << e.prior << ",\"";
    for (size_t c = 0; c < e.member_cells.size(); ++c) {
      if (c) out << ' ';
      out << (e.member_cells[c] + 1);
    }
    out << "\"\n";
  }
}

void write_coefficient_csv(const std::string& path,
                           const TrainedArtifact& artifact, double level) {
  auto out = open_out(path);
  out << std::setprecision(17);
  out << "epic,feature,estimate,stderr,ci_low,ci_high,shrunk_to_zero\n";
  const auto& names = artifact.schema.feature_names;
  for (int j = 0; j < artifact.mlm.epic_count(); ++j) {
    const auto& epic = artifact.mlm.epics[static_cast<size_t>(j)];

    // Refit-on-support needs the EPIC's standardized training rows.
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < artifact.mlm.train_epic_labels.size(); ++i)
      if (artifact.mlm.train_epic_labels[i] == j) rows.push_back(i);
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(rows.size()),
                       artifact.train_x.cols());
    Eigen::VectorXd ys(static_cast<Eigen::Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
      xs.row(static_cast<Eigen::Index>(r)) = artifact.train_x.row(rows[r]);
      ys[static_cast<Eigen::Index>(r)] = artifact.train_y[rows[r]];
    }
    Eigen::MatrixXd xs_std = artifact.mlm.scaler.transform_rows(xs);

    ConfidenceIntervals cis;
    bool have = true;
    try {
      cis = confidence_intervals(epic.local_model, level, xs_std, ys);
    } catch (const MlmError&) {
      have = false;  // degenerate pools may defeat the refit
    }

    auto emit = [&](const std::string& feature, double estimate,
                    const CoefInterval* ci) {
      out << (j + 1) << ',' << feature << ',' << estimate << ',';
      if (ci) out << ci->stderr_value << ',' << ci->lo << ',' << ci->hi;
      else out << ",,";
      out << ',' << (ci && ci->shrunk_to_zero ? 1 : 0) << '\n';
    };

    emit("(intercept)", epic.local_model.intercept,
         have ? &cis.intercept : nullptr);
    for (Eigen::Index c = 0; c < epic.local_model.p(); ++c)
      emit(names[static_cast<size_t>(c)], epic.local_model.coefficients[c],
           have ? &cis.coefficients[static_cast<size_t>(c)] : nullptr);
  }
}

std::string lds_report_json(const ExplainableDims& dims,
                            const std::vector<std::string>& feature_names) {
  json doc;
  doc["epic"] = dims.epic + 1;
  doc["found"] = dims.found;
  doc["rate"] = dims.rate;
  doc["xi"] = dims.xi;
  json vars = json::array();
  for (int d : dims.dims) vars.push_back(feature_names[static_cast<size_t>(d)]);
  doc["dimensions"] = std::move(vars);
  json idx = json::array();
  for (int d : dims.dims) idx.push_back(d);
  doc["dimension_indices"] = std::move(idx);
  doc["step_rates"] = dims.step_rates;
  return doc.dump(2);
}

std::string conditions_report_json(
    const std::vector<ExplainableCondition>& conditions,
    const std::vector<std::string>& feature_names,
    const std::vector<ColumnKind>& column_kinds, int epic_size) {
  json doc = json::array();
  for (const auto& cond : conditions) {
    json c;
    c["epic"] = cond.epic + 1;
    c["epic_size"] = epic_size;
    c["covered"] = cond.covered;
    c["purity"] = cond.purity;
    c["depth"] = cond.depth;
    json intervals = json::object();
    for (const auto& [var, iv] : cond.intervals)
      intervals[feature_names[static_cast<size_t>(var)]] = interval_json(iv);
    c["intervals"] = std::move(intervals);
    c["text"] = render_condition(cond, feature_names, column_kinds);
    doc.push_back(std::move(c));
  }
  return doc.dump(2);
}

std::string conditions_text_table(
    const std::vector<ExplainableCondition>& conditions,
    const std::vector<std::string>& feature_names,
    const std::vector<ColumnKind>& column_kinds, int epic, int epic_size) {
  std::ostringstream out;
  out << "EPIC " << (epic + 1) << " (" << epic_size << ")\n";
  if (conditions.empty()) {
    out << "  no explainable condition at the requested purity/size\n";
    return out.str();
  }
  for (const auto& cond : conditions) {
    out << "  " << render_condition(cond, feature_names, column_kinds)
        << "  | size " << cond.covered << ", purity "
        << std::fixed << std::setprecision(3) << cond.purity << '\n';
    out.unsetf(std::ios_base::floatfield);
  }
  return out.str();
}

void write_marginal_curves_csv(const std::string& path,
                               const TrainedArtifact& artifact,
                               const std::vector<int>& dims, int grid_points) {
  auto out = open_out(path);
  out << std::setprecision(17);
  out << "dimension,feature,x";
  for (int j = 0; j < artifact.mlm.epic_count(); ++j)
    out << ",density_epic_" << (j + 1);
  out << '\n';

  for (int dim : dims) {
    double lo = artifact.train_x.col(dim).minCoeff();
    double hi = artifact.train_x.col(dim).maxCoeff();
    double pad = 0.1 * (hi - lo);
    lo -= pad;
    hi += pad;

    std::vector<Gmm> margs;
    for (const auto& e : artifact.mlm.epics)
      margs.push_back(marginal(e.density, {dim}));

    double mean = artifact.mlm.scaler.means[dim];
    double sd = artifact.mlm.scaler.stds[dim];
    for (int g = 0; g < grid_points; ++g) {
      double x = lo + (hi - lo) * g / (grid_points - 1);
      out << dim << ','
          << artifact.schema.feature_names[static_cast<size_t>(dim)] << ','
          << x;
      Eigen::VectorXd z(1);
      z[0] = (x - mean) / sd;
      for (const auto& m : margs)
        out << ',' << std::exp(log_density(m, z)) / sd;
      out << '\n';
    }
  }
}

namespace {

struct SvgFrame {
  double width = 640, height = 400, margin = 45;
  double x0, x1, y0, y1;

  double px(double x) const {
    return margin + (x - x0) / (x1 - x0) * (width - 2 * margin);
  }
  double py(double y) const {
    return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin);
  }
};

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                               "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

void svg_header(std::ostream& out, const SvgFrame& f, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width
      << "\" height=\"" << f.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << f.width / 2 << "\" y=\"18\" text-anchor=\"middle\" "
         "font-size=\"13\" font-family=\"sans-serif\">"
      << title << "</text>\n";
  out << "<line x1=\"" << f.margin << "\" y1=\"" << f.height - f.margin
      << "\" x2=\"" << f.width - f.margin << "\" y2=\"" << f.height - f.margin
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << f.margin << "\" y1=\"" << f.margin << "\" x2=\""
      << f.margin << "\" y2=\"" << f.height - f.margin
      << "\" stroke=\"black\"/>\n";
}

}  // namespace

void write_density_svg(const std::string& path,
                       const TrainedArtifact& artifact, int dim,
                       int grid_points) {
  double lo = artifact.train_x.col(dim).minCoeff();
  double hi = artifact.train_x.col(dim).maxCoeff();
  double pad = 0.1 * (hi - lo);
  lo -= pad;
  hi += pad;

  std::vector<Gmm> margs;
  for (const auto& e : artifact.mlm.epics)
    margs.push_back(marginal(e.density, {dim}));
  double mean = artifact.mlm.scaler.means[dim];
  double sd = artifact.mlm.scaler.stds[dim];

  std::vector<std::vector<std::pair<double, double>>> series(margs.size());
  double dmax = 0.0;
  for (int g = 0; g < grid_points; ++g) {
    double x = lo + (hi - lo) * g / (grid_points - 1);
    Eigen::VectorXd z(1);
    z[0] = (x - mean) / sd;
    for (size_t j = 0; j < margs.size(); ++j) {
      double d = std::exp(log_density(margs[j], z)) / sd;
      series[j].push_back({x, d});
      dmax = std::max(dmax, d);
    }
  }

  SvgFrame frame;
  frame.x0 = lo;
  frame.x1 = hi;
  frame.y0 = 0.0;
  frame.y1 = dmax > 0 ? 1.05 * dmax : 1.0;

  auto out = open_out(path);
  svg_header(out, frame,
             "marginal density of " +
                 artifact.schema.feature_names[static_cast<size_t>(dim)]);
  for (size_t j = 0; j < series.size(); ++j) {
    out << "<polyline fill=\"none\" stroke=\"" << kSeriesColors[j % 8]
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, d] : series[j])
      out << frame.px(x) << ',' << frame.py(d) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << frame.width - frame.margin + 4 << "\" y=\""
        << frame.margin + 14 * static_cast<double>(j)
        << "\" font-size=\"11\" font-family=\"sans-serif\" fill=\""
        << kSeriesColors[j % 8] << "\">E" << (j + 1) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_coefficient_svg(const std::string& path,
                           const TrainedArtifact& artifact, int epic,
                           double level) {
  const auto& model =
      artifact.mlm.epics[static_cast<size_t>(epic)].local_model;
  const auto& names = artifact.schema.feature_names;

  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < artifact.mlm.train_epic_labels.size(); ++i)
    if (artifact.mlm.train_epic_labels[i] == epic) rows.push_back(i);
  Eigen::MatrixXd xs(static_cast<Eigen::Index>(rows.size()),
                     artifact.train_x.cols());
  Eigen::VectorXd ys(static_cast<Eigen::Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    xs.row(static_cast<Eigen::Index>(r)) = artifact.train_x.row(rows[r]);
    ys[static_cast<Eigen::Index>(r)] = artifact.train_y[rows[r]];
  }
  Eigen::MatrixXd xs_std = artifact.mlm.scaler.transform_rows(xs);

  bool have = true;
  ConfidenceIntervals cis;
  try {
    cis = confidence_intervals(model, level, xs_std, ys);
  } catch (const MlmError&) {
    have = false;
  }

  const auto p = static_cast<size_t>(model.p());
  double lo = 0.0, hi = 0.0;
  for (size_t c = 0; c < p; ++c) {
    double est = model.coefficients[static_cast<Eigen::Index>(c)];
    double a = have ? cis.coefficients[c].lo : est;
    double b = have ? cis.coefficients[c].hi : est;
    lo = std::min({lo, a, est});
    hi = std::max({hi, b, est});
  }
  if (lo == hi) {
    lo -= 1;
    hi += 1;
  }

  SvgFrame frame;
  frame.height = 60.0 + 22.0 * static_cast<double>(p);
  frame.margin = 45;
  frame.x0 = lo - 0.05 * (hi - lo);
  frame.x1 = hi + 0.05 * (hi - lo);
  frame.y0 = 0;
  frame.y1 = 1;

  auto out = open_out(path);
  svg_header(out, frame, "EPIC " + std::to_string(epic + 1) + " coefficients");
  double zero_px = frame.px(0.0);
  out << "<line x1=\"" << zero_px << "\" y1=\"" << frame.margin << "\" x2=\""
      << zero_px << "\" y2=\"" << frame.height - frame.margin
      << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
  for (size_t c = 0; c < p; ++c) {
    double yline = frame.margin + 12.0 + 22.0 * static_cast<double>(c);
    double est = model.coefficients[static_cast<Eigen::Index>(c)];
    if (have) {
      out << "<line x1=\"" << frame.px(cis.coefficients[c].lo) << "\" y1=\""
          << yline << "\" x2=\"" << frame.px(cis.coefficients[c].hi)
          << "\" y2=\"" << yline << "\" stroke=\"#9467bd\" "
             "stroke-width=\"2\"/>\n";
    }
    out << "<circle cx=\"" << frame.px(est) << "\" cy=\"" << yline
        << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
    out << "<text x=\"4\" y=\"" << yline + 4
        << "\" font-size=\"10\" font-family=\"sans-serif\">" << names[c]
        << "</text>\n";
  }
  out << "</svg>\n";
}

std::string cv_result_json(const CvResult& result) {
  json doc;
  doc["chosen_k"] = result.chosen_k;
  doc["metric"] = result.metric;
  json rows = json::array();
  for (const auto& row : result.table) {
    json r;
    r["k"] = row.k;
    r["fold_scores"] = row.fold_scores;
    r["mean_score"] = row.mean_score;
    rows.push_back(std::move(r));
  }
  doc["table"] = std::move(rows);
  return doc.dump(2);
}

std::string evaluate_report_json(const TrainedArtifact& artifact,
                                 const TrainMetrics& test_metrics) {
  json doc;
  doc["train"] = metrics_json(artifact.config.task, artifact.train_metrics);
  doc["test"] = metrics_json(artifact.config.task, test_metrics);
  return doc.dump(2);
}

}  // namespace mlm
