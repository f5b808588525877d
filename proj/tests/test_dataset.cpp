#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "mlm/dataset.hpp"
#include "synthetic.hpp"

using namespace mlm;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("load_csv parses a plain numeric file") {
  synth::TempDir dir("load");
  write_file(dir.path("d.csv"), "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
  Dataset ds = load_csv(dir.path("d.csv"), "y", Task::Regression);
  CHECK(ds.n() == 3);
  CHECK(ds.p() == 2);
  CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(ds.y[2] == doctest::Approx(9.0));
  CHECK(ds.x(1, 0) == doctest::Approx(4.0));
}

TEST_CASE("load_csv reports ragged rows with the file line number") {
  synth::TempDir dir("ragged");
  write_file(dir.path("d.csv"), "a,b,y\n1,2\n3,4,5\n");
  try {
    load_csv(dir.path("d.csv"), "y", Task::Regression);
    FAIL("expected RaggedRows");
  } catch (const MlmError& e) {
    CHECK(e.kind() == Err::RaggedRows);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("load_csv error paths") {
  synth::TempDir dir("errors");
  write_file(dir.path("empty.csv"), "");
  CHECK_THROWS_AS(load_csv(dir.path("empty.csv"), "y", Task::Regression),
                  MlmError);

  write_file(dir.path("header_only.csv"), "a,b,y\n");
  try {
    load_csv(dir.path("header_only.csv"), "y", Task::Regression);
    FAIL("expected EmptyFile");
  } catch (const MlmError& e) {
    CHECK(e.kind() == Err::EmptyFile);
  }

  write_file(dir.path("no_target.csv"), "a,b\n1,2\n");
  try {
    load_csv(dir.path("no_target.csv"), "y", Task::Regression);
    FAIL("expected MissingTarget");
  } catch (const MlmError& e) {
    CHECK(e.kind() == Err::MissingTarget);
  }

  write_file(dir.path("bad_target.csv"), "a,y\n1,oops\n");
  try {
    load_csv(dir.path("bad_target.csv"), "y", Task::Regression);
    FAIL("expected UnparseableCell");
  } catch (const MlmError& e) {
    CHECK(e.kind() == Err::UnparseableCell);
  }
}

TEST_CASE("load_csv handles quoted fields and classification targets") {
  synth::TempDir dir("quoted");
  write_file(dir.path("d.csv"),
             "name,a,y\n\"x, with comma\",1,0\n\"he said \"\"hi\"\"\",2,1\n");
  Dataset ds = load_csv(dir.path("d.csv"), "y", Task::BinaryClassification);
  CHECK(ds.n() == 2);
  REQUIRE(ds.nominals.size() == 1);
  CHECK(ds.nominals[0].values[0] == "x, with comma");
  CHECK(ds.nominals[0].values[1] == "he said \"hi\"");

  write_file(dir.path("bad.csv"), "a,y\n1,2\n");
  CHECK_THROWS_AS(load_csv(dir.path("bad.csv"), "y", Task::BinaryClassification),
                  MlmError);
}

TEST_CASE("dummy_encode expands a 3-level column into 2 dummies") {
  Dataset ds;
  ds.task = Task::Regression;
  ds.x.resize(4, 1);
  ds.x << 1, 2, 3, 4;
  ds.y.resize(4);
  ds.y << 1, 2, 3, 4;
  ds.feature_names = {"num"};
  ds.column_kinds = {ColumnKind::Continuous};
  ds.nominals.push_back({"col", {"B", "A", "C", "B"}});

  Dataset enc = dummy_encode(ds);
  CHECK(enc.p() == 3);
  CHECK(enc.feature_names[1] == "col:B");
  CHECK(enc.feature_names[2] == "col:C");
  CHECK(enc.column_kinds[1] == ColumnKind::BinaryDummy);
  // reference level A encodes to all-zero
  CHECK(enc.x(1, 1) == 0.0);
  CHECK(enc.x(1, 2) == 0.0);
  CHECK(enc.x(0, 1) == 1.0);
  CHECK(enc.x(2, 2) == 1.0);
  CHECK(enc.nominals.empty());
  REQUIRE(enc.encodings.size() == 1);
  CHECK(enc.encodings[0].levels ==
        std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("dummy_encode output column count and identity on pure numeric") {
  Dataset ds;
  ds.task = Task::Regression;
  ds.x.resize(2, 2);
  ds.x << 1, 2, 3, 4;
  ds.y.resize(2);
  ds.y << 1, 2;
  ds.feature_names = {"a", "b"};
  ds.column_kinds = {ColumnKind::Continuous, ColumnKind::Continuous};

  Dataset enc = dummy_encode(ds);
  CHECK(enc.p() == 2);
  CHECK(enc.x == ds.x);

  ds.nominals.push_back({"c3", {"x", "y", "z"}});
  ds.nominals.push_back({"c4", {"p", "q", "p"}});
  Dataset enc2 = dummy_encode(ds);
  CHECK(enc2.p() == 2 + 2 + 1);  // p_cont + sum(c_i - 1)
}

TEST_CASE("dummy_encode rejects single-level columns") {
  Dataset ds;
  ds.task = Task::Regression;
  ds.x.resize(2, 1);
  ds.x << 1, 2;
  ds.y.resize(2);
  ds.y << 1, 2;
  ds.feature_names = {"a"};
  ds.column_kinds = {ColumnKind::Continuous};
  ds.nominals.push_back({"c", {"only", "only"}});
  try {
    dummy_encode(ds);
    FAIL("expected SingleLevelColumn");
  } catch (const MlmError& e) {
    CHECK(e.kind() == Err::SingleLevelColumn);
  }
}

TEST_CASE("standardize: population convention, idempotence, constants") {
  Dataset ds;
  ds.task = Task::Regression;
  ds.x.resize(3, 3);
  ds.x.col(0) << 1, 2, 3;
  ds.x.col(1) << -1.2247448713915890, 0, 1.2247448713915890;
  ds.x.col(2) << 5, 5, 5;
  ds.y.resize(3);
  ds.y << 0, 0, 0;
  ds.feature_names = {"a", "b", "c"};
  ds.column_kinds.assign(3, ColumnKind::Continuous);

  auto [out, scaler] = standardize(ds);
  CHECK(out.x(0, 0) == doctest::Approx(-1.2247448713915890).epsilon(1e-10));
  CHECK(out.x(1, 0) == doctest::Approx(0.0));
  CHECK(out.x(2, 0) == doctest::Approx(1.2247448713915890).epsilon(1e-10));

  // already standardized column stays put
  for (int i = 0; i < 3; ++i)
    CHECK(out.x(i, 1) == doctest::Approx(ds.x(i, 1)).epsilon(1e-12));

  // zero-variance column: all zeros, flagged, std forced to 1
  for (int i = 0; i < 3; ++i) CHECK(out.x(i, 2) == 0.0);
  CHECK(scaler.zero_variance[2]);
  CHECK(scaler.stds[2] == 1.0);
}

TEST_CASE("standardize leaves dummy columns alone and round-trips") {
  auto planted = synth::two_region_regression(50, 0.1, 42);
  Dataset ds = planted.data;
  // tack on a dummy column
  ds.x.conservativeResize(Eigen::NoChange, 5);
  for (int i = 0; i < 50; ++i) ds.x(i, 4) = i % 2;
  ds.feature_names.push_back("d:1");
  ds.column_kinds.push_back(ColumnKind::BinaryDummy);

  auto [out, scaler] = standardize(ds);
  CHECK(out.x.col(4) == ds.x.col(4));
  CHECK_FALSE(scaler.scaled[4]);

  Dataset back = inverse_standardize(out, scaler);
  CHECK((back.x - ds.x).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("split is deterministic, disjoint, exhaustive") {
  auto planted = synth::two_region_regression(10, 0.1, 3);
  auto [train1, test1] = split(planted.data, 0.3, 7);
  auto [train2, test2] = split(planted.data, 0.3, 7);
  CHECK(train1.n() == 7);
  CHECK(test1.n() == 3);
  CHECK(train1.x == train2.x);
  CHECK(test1.x == test2.x);

  // different seed moves rows around (overwhelmingly likely)
  auto [train3, test3] = split(planted.data, 0.3, 8);
  CHECK(train3.n() == 7);

  // exhaustive: row multiset is preserved (check y sums)
  CHECK(train1.y.sum() + test1.y.sum() ==
        doctest::Approx(planted.data.y.sum()).epsilon(1e-12));
}

TEST_CASE("split stratifies classification") {
  Dataset ds;
  ds.task = Task::BinaryClassification;
  ds.x.resize(10, 1);
  ds.y.resize(10);
  for (int i = 0; i < 10; ++i) {
    ds.x(i, 0) = i;
    ds.y[i] = i < 8 ? 0.0 : 1.0;
  }
  ds.feature_names = {"a"};
  ds.column_kinds = {ColumnKind::Continuous};

  auto [train, test] = split(ds, 0.5, 1);
  CHECK(train.y.sum() == doctest::Approx(1.0));
  CHECK(test.y.sum() == doctest::Approx(1.0));
}

TEST_CASE("split rejects bad fractions") {
  auto planted = synth::two_region_regression(10, 0.1, 3);
  CHECK_THROWS_AS(split(planted.data, 0.0, 1), MlmError);
  CHECK_THROWS_AS(split(planted.data, 1.0, 1), MlmError);
}

TEST_CASE("assemble_features matches by name and rejects drift") {
  synth::TempDir dir("assemble");
  write_file(dir.path("train.csv"), "a,color,y\n1,red,1\n2,blue,2\n3,red,3\n");
  Dataset raw = load_csv(dir.path("train.csv"), "y", Task::Regression);
  Dataset enc = dummy_encode(raw);
  DataSchema schema = schema_of(enc, "y");

  // shuffled column order, target present
  write_file(dir.path("new.csv"), "color,y,a\nred,9,5\nblue,9,6\n");
  RawTable table = read_csv_table(dir.path("new.csv"));
  Eigen::VectorXd y;
  Eigen::MatrixXd x = assemble_features(table, schema, &y, false);
  CHECK(x.rows() == 2);
  CHECK(x(0, 0) == 5.0);
  CHECK(x(1, 1) == 0.0);  // blue is the reference level
  CHECK(y.size() == 2);

  // missing column
  write_file(dir.path("missing.csv"), "a,y\n1,2\n");
  RawTable t2 = read_csv_table(dir.path("missing.csv"));
  try {
    assemble_features(t2, schema, nullptr, false);
    FAIL("expected SchemaMismatch");
  } catch (const MlmError& e) {
    CHECK(e.kind() == Err::SchemaMismatch);
    CHECK(std::string(e.what()).find("color") != std::string::npos);
  }

  // extra column
  write_file(dir.path("extra.csv"), "a,color,zz,y\n1,red,0,2\n");
  RawTable t3 = read_csv_table(dir.path("extra.csv"));
  CHECK_THROWS_AS(assemble_features(t3, schema, nullptr, false), MlmError);

  // unseen level
  write_file(dir.path("level.csv"), "a,color,y\n1,green,2\n");
  RawTable t4 = read_csv_table(dir.path("level.csv"));
  try {
    assemble_features(t4, schema, nullptr, false);
    FAIL("expected UnknownCategory");
  } catch (const MlmError& e) {
    CHECK(e.kind() == Err::UnknownCategory);
  }
}

TEST_CASE("csv writer round-trips through the reader") {
  synth::TempDir dir("roundtrip");
  RawTable table;
  table.headers = {"a", "weird,name", "y"};
  table.rows = {{"1", "va\"l", "2"}, {"3", "multi\nline", "4"}};
  write_csv_table(dir.path("t.csv"), table);
  RawTable back = read_csv_table(dir.path("t.csv"));
  CHECK(back.headers == table.headers);
  CHECK(back.rows == table.rows);
}
