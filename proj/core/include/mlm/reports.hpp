#ifndef MLM_REPORTS_HPP
#define MLM_REPORTS_HPP

#include <string>
#include <vector>

#include "mlm/interpret.hpp"
#include "mlm/model_io.hpp"
#include "mlm/pipeline.hpp"

namespace mlm {

/// report.json for a training run: cells, EPICs, sizes, metrics, warnings.
std::string run_report_json(const TrainedArtifact& artifact);

/// predictions CSV: row id + prediction columns; classification adds
/// probability and label; gammas appends one column per EPIC.
void write_predictions_csv(const std::string& path, Task task,
                           const Eigen::VectorXd& predictions,
                           const Eigen::MatrixXd* gammas);

/// (sample id, cell id, epic id) rows.
void write_cell_assignments_csv(const std::string& path,
                                const TrainedArtifact& artifact);

void write_loss_curve_csv(const std::string& path,
                          const std::vector<double>& losses);

/// (epic, size, prior, member_cells) rows.
void write_epic_summary_csv(const std::string& path, const MlmModel& model);

/// Per-coefficient table with confidence intervals for every EPIC's local
/// model; penalized models are refit on their support for the errors.
void write_coefficient_csv(const std::string& path,
                           const TrainedArtifact& artifact, double level);

std::string lds_report_json(const ExplainableDims& dims,
                            const std::vector<std::string>& feature_names);

std::string conditions_report_json(
    const std::vector<ExplainableCondition>& conditions,
    const std::vector<std::string>& feature_names,
    const std::vector<ColumnKind>& column_kinds, int epic_size);

/// Text table in the style of the paper's condition listings.
std::string conditions_text_table(
    const std::vector<ExplainableCondition>& conditions,
    const std::vector<std::string>& feature_names,
    const std::vector<ColumnKind>& column_kinds, int epic, int epic_size);

/// Marginal density curves along the chosen dimensions: a grid in original
/// units with one density column per EPIC.
void write_marginal_curves_csv(const std::string& path,
                               const TrainedArtifact& artifact,
                               const std::vector<int>& dims, int grid_points);

/// Minimal hand-written SVG output (polylines over a frame).
void write_density_svg(const std::string& path,
                       const TrainedArtifact& artifact, int dim,
                       int grid_points);

/// Horizontal bar-and-whisker SVG of one EPIC's coefficients and
/// confidence intervals.
void write_coefficient_svg(const std::string& path,
                           const TrainedArtifact& artifact, int epic,
                           double level);

std::string cv_result_json(const CvResult& result);

std::string evaluate_report_json(const TrainedArtifact& artifact,
                                 const TrainMetrics& test_metrics);

}  // namespace mlm

#endif  // MLM_REPORTS_HPP
