#include "mlm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mlm/rng.hpp"

namespace mlm {

namespace {

bool parse_double(const std::string& s, double* out) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return false;
  size_t e = s.find_last_not_of(" \t\r");
  std::string t = s.substr(b, e - b + 1);
  const char* c = t.c_str();
  char* end = nullptr;
  double v = std::strtod(c, &end);
  if (end != c + t.size()) return false;
  if (!std::isfinite(v)) return false;
  *out = v;
  return true;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

RawTable read_csv_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MlmError(Err::EmptyFile, "cannot open file: " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (content.empty()) throw MlmError(Err::EmptyFile, "empty file: " + path);

  // State-machine split into records of fields.
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any_char = false;
  for (size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      any_char = true;
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        any_char = true;
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        any_char = true;
        break;
      case '\r':
        break;  // handled with the following \n (or ignored)
      case '\n':
        if (any_char || !fields.empty()) {
          fields.push_back(std::move(field));
          field.clear();
          records.push_back(std::move(fields));
          fields.clear();
          any_char = false;
        }
        break;
      default:
        field += c;
        any_char = true;
        break;
    }
  }
  if (in_quotes)
    throw MlmError(Err::UnparseableCell, "unterminated quote in " + path);
  if (any_char || !fields.empty()) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }

  if (records.empty())
    throw MlmError(Err::EmptyFile, "no header row in " + path);

  RawTable table;
  table.headers = records[0];
  const size_t width = table.headers.size();
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      // 1-based file line number, header being line 1.
      throw MlmError(Err::RaggedRows,
                     "row " + std::to_string(r + 1) + " has " +
                         std::to_string(records[r].size()) +
                         " fields, header has " + std::to_string(width));
    }
    table.rows.push_back(std::move(records[r]));
  }
  if (table.rows.empty())
    throw MlmError(Err::EmptyFile, "no data rows in " + path);
  return table;
}

void write_csv_table(const std::string& path, const RawTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MlmError(Err::ConfigError, "cannot write file: " + path);
  for (size_t j = 0; j < table.headers.size(); ++j) {
    if (j) out << ',';
    out << csv_escape(table.headers[j]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << csv_escape(row[j]);
    }
    out << '\n';
  }
}

Dataset load_csv(const std::string& path, const std::string& target,
                 Task task, const std::vector<std::string>& declared_nominals) {
  RawTable table = read_csv_table(path);
  const size_t n = table.rows.size();
  const size_t width = table.headers.size();

  size_t target_idx = width;
  for (size_t j = 0; j < width; ++j)
    if (table.headers[j] == target) target_idx = j;
  if (target_idx == width)
    throw MlmError(Err::MissingTarget, "target column '" + target +
                                           "' not found in " + path);

  std::set<std::string> declared(declared_nominals.begin(),
                                 declared_nominals.end());

  // A column is nominal iff declared, or any cell fails numeric parsing.
  std::vector<bool> nominal(width, false);
  for (size_t j = 0; j < width; ++j) {
    if (j == target_idx) continue;
    if (declared.count(table.headers[j])) {
      nominal[j] = true;
      continue;
    }
    double v;
    for (size_t i = 0; i < n && !nominal[j]; ++i)
      if (!parse_double(table.rows[i][j], &v)) nominal[j] = true;
  }

  Dataset ds;
  ds.task = task;

  ds.y.resize(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    double v;
    if (!parse_double(table.rows[i][target_idx], &v))
      throw MlmError(Err::UnparseableCell,
                     "target cell at row " + std::to_string(i + 2) +
                         ", column '" + target + "' is not numeric: '" +
                         table.rows[i][target_idx] + "'");
    if (task == Task::BinaryClassification && v != 0.0 && v != 1.0)
      throw MlmError(Err::UnparseableCell,
                     "classification target at row " + std::to_string(i + 2) +
                         " is not 0/1: " + table.rows[i][target_idx]);
    ds.y[static_cast<Eigen::Index>(i)] = v;
  }

  std::vector<size_t> numeric_cols;
  for (size_t j = 0; j < width; ++j) {
    if (j == target_idx) continue;
    if (nominal[j]) {
      NominalColumn col;
      col.name = table.headers[j];
      col.values.reserve(n);
      for (size_t i = 0; i < n; ++i) col.values.push_back(table.rows[i][j]);
      ds.nominals.push_back(std::move(col));
    } else {
      numeric_cols.push_back(j);
    }
  }

  ds.x.resize(static_cast<Eigen::Index>(n),
              static_cast<Eigen::Index>(numeric_cols.size()));
  for (size_t c = 0; c < numeric_cols.size(); ++c) {
    size_t j = numeric_cols[c];
    ds.feature_names.push_back(table.headers[j]);
    ds.column_kinds.push_back(ColumnKind::Continuous);
    for (size_t i = 0; i < n; ++i) {
      double v;
      if (!parse_double(table.rows[i][j], &v))
        throw MlmError(Err::UnparseableCell,
                       "cell at row " + std::to_string(i + 2) + ", column '" +
                           table.headers[j] + "' is not numeric");
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
    }
  }

  std::set<std::string> seen;
  for (const auto& name : ds.feature_names)
    if (!seen.insert(name).second)
      throw MlmError(Err::SchemaMismatch, "duplicate column name: " + name);
  for (const auto& nom : ds.nominals)
    if (!seen.insert(nom.name).second)
      throw MlmError(Err::SchemaMismatch, "duplicate column name: " + nom.name);

  return ds;
}

Dataset dummy_encode(const Dataset& dataset) {
  if (dataset.nominals.empty()) {
    Dataset out = dataset;
    return out;
  }
  const Eigen::Index n = dataset.n();

  Dataset out;
  out.task = dataset.task;
  out.y = dataset.y;
  out.feature_names = dataset.feature_names;
  out.column_kinds = dataset.column_kinds;
  out.encodings = dataset.encodings;

  struct Group {
    NominalEncoding enc;
    std::vector<Eigen::VectorXd> columns;  // one per non-reference level
  };
  std::vector<Group> groups;
  for (const auto& nom : dataset.nominals) {
    std::set<std::string> level_set(nom.values.begin(), nom.values.end());
    if (level_set.size() < 2)
      throw MlmError(Err::SingleLevelColumn,
                     "nominal column '" + nom.name + "' has a single level");
    Group g;
    g.enc.name = nom.name;
    g.enc.levels.assign(level_set.begin(), level_set.end());
    for (size_t l = 1; l < g.enc.levels.size(); ++l) {
      Eigen::VectorXd col(n);
      for (Eigen::Index i = 0; i < n; ++i)
        col[i] = (nom.values[static_cast<size_t>(i)] == g.enc.levels[l]) ? 1.0
                                                                         : 0.0;
      g.columns.push_back(std::move(col));
    }
    groups.push_back(std::move(g));
  }

  Eigen::Index extra = 0;
  for (const auto& g : groups)
    extra += static_cast<Eigen::Index>(g.columns.size());

  out.x.resize(n, dataset.p() + extra);
  out.x.leftCols(dataset.p()) = dataset.x;
  Eigen::Index c = dataset.p();
  for (auto& g : groups) {
    for (size_t l = 0; l < g.columns.size(); ++l) {
      out.x.col(c) = g.columns[l];
      out.feature_names.push_back(g.enc.name + ":" + g.enc.levels[l + 1]);
      out.column_kinds.push_back(ColumnKind::BinaryDummy);
      ++c;
    }
    out.encodings.push_back(std::move(g.enc));
  }
  return out;
}

Eigen::VectorXd Scaler::transform(const Eigen::VectorXd& v) const {
  if (v.size() != means.size())
    throw MlmError(Err::DimensionMismatch, "scaler size mismatch");
  return (v - means).cwiseQuotient(stds);
}

Eigen::VectorXd Scaler::inverse(const Eigen::VectorXd& v) const {
  if (v.size() != means.size())
    throw MlmError(Err::DimensionMismatch, "scaler size mismatch");
  return v.cwiseProduct(stds) + means;
}

Eigen::MatrixXd Scaler::transform_rows(const Eigen::MatrixXd& m) const {
  if (m.cols() != means.size())
    throw MlmError(Err::DimensionMismatch, "scaler size mismatch");
  return (m.rowwise() - means.transpose()).array().rowwise() /
         stds.transpose().array();
}

Eigen::MatrixXd Scaler::inverse_rows(const Eigen::MatrixXd& m) const {
  if (m.cols() != means.size())
    throw MlmError(Err::DimensionMismatch, "scaler size mismatch");
  return (m.array().rowwise() * stds.transpose().array()).matrix().rowwise() +
         means.transpose();
}

Scaler Scaler::identity(Eigen::Index p) {
  Scaler s;
  s.means = Eigen::VectorXd::Zero(p);
  s.stds = Eigen::VectorXd::Ones(p);
  s.scaled.assign(static_cast<size_t>(p), false);
  s.zero_variance.assign(static_cast<size_t>(p), false);
  return s;
}

std::pair<Dataset, Scaler> standardize(const Dataset& dataset) {
  const Eigen::Index n = dataset.n();
  const Eigen::Index p = dataset.p();
  Scaler scaler = Scaler::identity(p);
  Dataset out = dataset;

  for (Eigen::Index j = 0; j < p; ++j) {
    if (dataset.column_kinds[static_cast<size_t>(j)] != ColumnKind::Continuous)
      continue;
    double mean = dataset.x.col(j).mean();
    double var =
        (dataset.x.col(j).array() - mean).square().sum() / static_cast<double>(n);
    double sd = std::sqrt(var);
    scaler.means[j] = mean;
    scaler.scaled[static_cast<size_t>(j)] = true;
    if (sd > 0.0) {
      scaler.stds[j] = sd;
    } else {
      scaler.stds[j] = 1.0;
      scaler.zero_variance[static_cast<size_t>(j)] = true;
    }
    out.x.col(j) = (dataset.x.col(j).array() - mean) / scaler.stds[j];
  }
  return {std::move(out), std::move(scaler)};
}

Dataset inverse_standardize(const Dataset& dataset, const Scaler& scaler) {
  Dataset out = dataset;
  out.x = scaler.inverse_rows(dataset.x);
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction,
                                  std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw MlmError(Err::FractionOutOfRange,
                   "test_fraction must be in (0,1), got " +
                       std::to_string(test_fraction));
  const Eigen::Index n = dataset.n();
  if (n < 2)
    throw MlmError(Err::TooFewPoints, "split requires at least 2 rows");

  std::vector<Eigen::Index> test_idx;
  Rng rng = make_rng(seed);

  if (dataset.task == Task::BinaryClassification) {
    for (double cls : {0.0, 1.0}) {
      std::vector<Eigen::Index> members;
      for (Eigen::Index i = 0; i < n; ++i)
        if (dataset.y[i] == cls) members.push_back(i);
      std::shuffle(members.begin(), members.end(), rng);
      auto take = static_cast<size_t>(
          std::llround(test_fraction * static_cast<double>(members.size())));
      take = std::min(take, members.size());
      test_idx.insert(test_idx.end(), members.begin(),
                      members.begin() + static_cast<std::ptrdiff_t>(take));
    }
  } else {
    std::vector<Eigen::Index> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    auto take = static_cast<size_t>(
        std::llround(test_fraction * static_cast<double>(n)));
    take = std::clamp<size_t>(take, 1, static_cast<size_t>(n) - 1);
    test_idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take));
  }

  std::vector<bool> in_test(static_cast<size_t>(n), false);
  for (auto i : test_idx) in_test[static_cast<size_t>(i)] = true;

  auto subset = [&](bool test_side) {
    Dataset part;
    part.task = dataset.task;
    part.feature_names = dataset.feature_names;
    part.column_kinds = dataset.column_kinds;
    part.encodings = dataset.encodings;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i)
      if (in_test[static_cast<size_t>(i)] == test_side) keep.push_back(i);
    part.x.resize(static_cast<Eigen::Index>(keep.size()), dataset.p());
    part.y.resize(static_cast<Eigen::Index>(keep.size()));
    for (size_t r = 0; r < keep.size(); ++r) {
      part.x.row(static_cast<Eigen::Index>(r)) = dataset.x.row(keep[r]);
      part.y[static_cast<Eigen::Index>(r)] = dataset.y[keep[r]];
    }
    for (const auto& nom : dataset.nominals) {
      NominalColumn col;
      col.name = nom.name;
      for (auto i : keep) col.values.push_back(nom.values[static_cast<size_t>(i)]);
      part.nominals.push_back(std::move(col));
    }
    return part;
  };

  return {subset(false), subset(true)};
}

DataSchema schema_of(const Dataset& encoded, const std::string& target) {
  DataSchema s;
  s.target = target;
  s.task = encoded.task;
  s.feature_names = encoded.feature_names;
  s.column_kinds = encoded.column_kinds;
  s.encodings = encoded.encodings;
  for (size_t j = 0; j < encoded.feature_names.size(); ++j)
    if (encoded.column_kinds[j] == ColumnKind::Continuous)
      s.numeric_columns.push_back(encoded.feature_names[j]);
  return s;
}

Eigen::MatrixXd assemble_features(const RawTable& table,
                                  const DataSchema& schema,
                                  Eigen::VectorXd* y_out, bool require_target) {
  std::map<std::string, size_t> col_of;
  for (size_t j = 0; j < table.headers.size(); ++j)
    col_of[table.headers[j]] = j;

  std::vector<std::string> missing, extra;
  std::set<std::string> expected(schema.numeric_columns.begin(),
                                 schema.numeric_columns.end());
  for (const auto& enc : schema.encodings) expected.insert(enc.name);

  for (const auto& name : expected)
    if (!col_of.count(name)) missing.push_back(name);
  bool has_target = col_of.count(schema.target) > 0;
  if (require_target && !has_target) missing.push_back(schema.target);
  for (const auto& h : table.headers)
    if (!expected.count(h) && h != schema.target) extra.push_back(h);

  if (!missing.empty() || !extra.empty()) {
    std::ostringstream msg;
    msg << "schema mismatch;";
    if (!missing.empty()) {
      msg << " missing columns:";
      for (const auto& m : missing) msg << " " << m;
    }
    if (!extra.empty()) {
      msg << " unexpected columns:";
      for (const auto& e : extra) msg << " " << e;
    }
    throw MlmError(Err::SchemaMismatch, msg.str());
  }

  const size_t n = table.rows.size();
  const size_t p = schema.feature_names.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));

  size_t out_col = 0;
  for (const auto& name : schema.numeric_columns) {
    size_t j = col_of[name];
    for (size_t i = 0; i < n; ++i) {
      double v;
      if (!parse_double(table.rows[i][j], &v))
        throw MlmError(Err::UnparseableCell,
                       "cell at row " + std::to_string(i + 2) + ", column '" +
                           name + "' is not numeric");
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(out_col)) = v;
    }
    ++out_col;
  }
  for (const auto& enc : schema.encodings) {
    size_t j = col_of[enc.name];
    std::vector<size_t> level_cols(enc.levels.size());
    for (size_t i = 0; i < n; ++i) {
      const std::string& cell = table.rows[i][j];
      auto it = std::find(enc.levels.begin(), enc.levels.end(), cell);
      if (it == enc.levels.end())
        throw MlmError(Err::UnknownCategory,
                       "column '" + enc.name + "' has unseen level '" + cell +
                           "' at row " + std::to_string(i + 2));
      size_t level = static_cast<size_t>(it - enc.levels.begin());
      for (size_t l = 1; l < enc.levels.size(); ++l)
        x(static_cast<Eigen::Index>(i),
          static_cast<Eigen::Index>(out_col + l - 1)) = (level == l) ? 1.0 : 0.0;
    }
    (void)level_cols;
    out_col += enc.levels.size() - 1;
  }

  if (y_out && has_target) {
    size_t j = col_of[schema.target];
    y_out->resize(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
      double v;
      if (!parse_double(table.rows[i][j], &v))
        throw MlmError(Err::UnparseableCell,
                       "target cell at row " + std::to_string(i + 2) +
                           " is not numeric");
      (*y_out)[static_cast<Eigen::Index>(i)] = v;
    }
  } else if (y_out) {
    y_out->resize(0);
  }

  return x;
}

}  // namespace mlm
