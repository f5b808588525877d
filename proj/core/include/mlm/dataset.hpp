#ifndef MLM_DATASET_HPP
#define MLM_DATASET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mlm/errors.hpp"

namespace mlm {

enum class Task { Regression, BinaryClassification };

enum class ColumnKind { Continuous, BinaryDummy };

/// Raw CSV contents: header plus string cells, prior to any typing.
struct RawTable {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
};

/// RFC-4180-style reader: quoted fields, embedded commas/newlines/quotes,
/// CRLF or LF line ends. Header row is mandatory.
RawTable read_csv_table(const std::string& path);

void write_csv_table(const std::string& path, const RawTable& table);

/// A nominal column kept as raw strings until dummy_encode consumes it.
struct NominalColumn {
  std::string name;
  std::vector<std::string> values;  // length n
};

/// Levels of one encoded nominal column. The reference level is the first
/// in sorted order and gets no dummy column.
struct NominalEncoding {
  std::string name;
  std::vector<std::string> levels;  // sorted; levels[0] is the reference
};

struct Dataset {
  std::vector<std::string> feature_names;  // names for columns of x
  Eigen::MatrixXd x;                       // n x p, row per sample
  Eigen::VectorXd y;                       // length n
  Task task = Task::Regression;
  std::vector<ColumnKind> column_kinds;    // per column of x

  // Raw nominal columns awaiting dummy_encode (empty afterwards).
  std::vector<NominalColumn> nominals;
  // Populated by dummy_encode; needed to encode new rows at predict time.
  std::vector<NominalEncoding> encodings;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

struct Scaler {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;               // > 0; 1 for unscaled columns
  std::vector<bool> scaled;           // false for dummy columns
  std::vector<bool> zero_variance;    // flagged constant columns

  Eigen::Index size() const { return means.size(); }
  bool empty() const { return means.size() == 0; }

  Eigen::VectorXd transform(const Eigen::VectorXd& v) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd transform_rows(const Eigen::MatrixXd& m) const;
  Eigen::MatrixXd inverse_rows(const Eigen::MatrixXd& m) const;

  static Scaler identity(Eigen::Index p);
};

/// Loads a CSV with a mandatory header. The target column becomes y; every
/// other column is numeric unless a cell fails numeric parsing or the
/// column is listed in declared_nominals, in which case the whole column is
/// kept raw for dummy_encode.
Dataset load_csv(const std::string& path, const std::string& target,
                 Task task,
                 const std::vector<std::string>& declared_nominals = {});

/// Replaces each c-level nominal column by c-1 binary columns named
/// "origin:level" (reference level = first level in sorted order). Dummy
/// groups are appended after the numeric columns, in the nominal columns'
/// original order.
Dataset dummy_encode(const Dataset& dataset);

/// Centers and scales each continuous column to mean 0, std 1 (population
/// convention: divide by sqrt(mean squared deviation)). Binary dummy
/// columns are left unscaled. Zero-variance columns get std 1 and are
/// flagged.
std::pair<Dataset, Scaler> standardize(const Dataset& dataset);

Dataset inverse_standardize(const Dataset& dataset, const Scaler& scaler);

/// Deterministic train/test split; stratified by class for classification.
std::pair<Dataset, Dataset> split(const Dataset& dataset,
                                  double test_fraction, std::uint64_t seed);

/// Encodes one raw row (numeric cells by name, nominal cells by level)
/// into the trained feature layout. Used when scoring new CSV files.
struct DataSchema {
  std::vector<std::string> numeric_columns;   // original order
  std::vector<NominalEncoding> encodings;     // original nominal order
  std::vector<std::string> feature_names;     // encoded layout
  std::vector<ColumnKind> column_kinds;
  std::string target;
  Task task = Task::Regression;
};

DataSchema schema_of(const Dataset& encoded, const std::string& target);

/// Matrix assembly from a raw table, matched by column name (order-free).
/// Missing or extra feature columns raise SchemaMismatch; unseen nominal
/// levels raise UnknownCategory. y_out is filled only when the target
/// column is present (require_target makes its absence an error).
Eigen::MatrixXd assemble_features(const RawTable& table,
                                  const DataSchema& schema,
                                  Eigen::VectorXd* y_out,
                                  bool require_target);

}  // namespace mlm

#endif  // MLM_DATASET_HPP
