#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fraudfuse/csv.hpp"
#include "fraudfuse/dataset.hpp"
#include "fraudfuse/errors.hpp"
#include "fraudfuse/schema.hpp"
#include "fraudfuse/synthgen.hpp"

using namespace fraudfuse;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fraudfuse_dataset_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::filesystem::path write_file(const std::string& name, const std::string& content) {
  const auto path = temp_file(name);
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

FeatureSchema tiny_schema() {
  FeatureSchema s;
  s.columns.push_back({"tenure", FeatureGroup::super_app, ColumnKind::numeric, {}, ""});
  s.columns.push_back({"calls", FeatureGroup::mobile, ColumnKind::numeric, {}, ""});
  s.columns.push_back(
      {"band", FeatureGroup::credit_bureau, ColumnKind::categorical, {"A", "B", "C"}, ""});
  return s;
}

DataSchemaFile tiny_file() {
  DataSchemaFile f;
  f.schema = tiny_schema();
  return f;
}

}  // namespace

TEST_CASE("schema validation rejects malformed column sets") {
  FeatureSchema s = tiny_schema();
  CHECK_NOTHROW(s.validate());

  FeatureSchema dup = tiny_schema();
  dup.columns.push_back(dup.columns[0]);
  CHECK_THROWS_WITH_AS(dup.validate(), doctest::Contains("duplicate"), Error);

  FeatureSchema numcat = tiny_schema();
  numcat.columns[0].categories = {"x"};
  CHECK_THROWS_AS(numcat.validate(), Error);

  FeatureSchema emptycat = tiny_schema();
  emptycat.columns[2].categories.clear();
  CHECK_THROWS_AS(emptycat.validate(), Error);

  FeatureSchema dupcat = tiny_schema();
  dupcat.columns[2].categories = {"A", "A"};
  CHECK_THROWS_AS(dupcat.validate(), Error);
}

TEST_CASE("schema fingerprint is stable and sensitive") {
  const FeatureSchema a = tiny_schema();
  FeatureSchema b = tiny_schema();
  CHECK(schema_fingerprint(a) == schema_fingerprint(b));
  b.columns[1].name = "calls2";
  CHECK(schema_fingerprint(a) != schema_fingerprint(b));
  FeatureSchema c = tiny_schema();
  c.columns[2].categories = {"A", "C", "B"};  // category order is part of the identity
  CHECK(schema_fingerprint(a) != schema_fingerprint(c));
  CHECK(fingerprint_hex(schema_fingerprint(a)).size() == 16);
}

TEST_CASE("schema JSON and schema file round-trip") {
  const FeatureSchema s = tiny_schema();
  const FeatureSchema back = schema_from_json(schema_to_json(s));
  CHECK(schema_fingerprint(s) == schema_fingerprint(back));

  DataSchemaFile f = tiny_file();
  f.label_column = "fraud_flag";
  f.order_column = "seq";
  const auto path = temp_file("schema_roundtrip.json");
  save_schema_file(f, path);
  const DataSchemaFile g = load_schema_file(path);
  CHECK(g.label_column == "fraud_flag");
  CHECK(g.order_column == "seq");
  CHECK(schema_fingerprint(f.schema) == schema_fingerprint(g.schema));

  CHECK_THROWS_AS(load_schema_file(temp_file("does_not_exist.json")), Error);
  const auto bad = write_file("bad_schema.json", "{not json");
  CHECK_THROWS_AS(load_schema_file(bad), Error);
}

TEST_CASE("scenario ids resolve to their group sets") {
  CHECK(Scenario::all_six().size() == 6);
  const Scenario sm = Scenario::from_id("S+M");
  CHECK(sm.groups.size() == 2);
  const Scenario all = Scenario::from_id("S+M+C");
  CHECK(all.groups.size() == 3);
  CHECK(Scenario::from_id("C").groups == std::set<FeatureGroup>{FeatureGroup::credit_bureau});
  CHECK_THROWS_AS(Scenario::from_id("M+S"), Error);  // only the canonical spellings
  CHECK_THROWS_AS(Scenario::from_id(""), Error);
  CHECK_THROWS_AS(Scenario::from_id("X"), Error);
}

TEST_CASE("csv reader handles quoting, blank cells and bad field counts") {
  const auto path = write_file("quoting.csv", "a,b,c\n1,\"x,y\",\n2,\"he said \"\"hi\"\"\",3\n");
  CsvReader r(path);
  CHECK(r.header() == std::vector<std::string>{"a", "b", "c"});
  std::vector<std::string> row;
  REQUIRE(r.next_row(row));
  CHECK(row == std::vector<std::string>{"1", "x,y", ""});
  REQUIRE(r.next_row(row));
  CHECK(row == std::vector<std::string>{"2", "he said \"hi\"", "3"});
  CHECK_FALSE(r.next_row(row));

  const auto ragged = write_file("ragged.csv", "a,b\n1\n");
  CsvReader r2(ragged);
  CHECK_THROWS_AS(r2.next_row(row), Error);
  CHECK_THROWS_AS(CsvReader(write_file("empty.csv", "")), Error);
}

TEST_CASE("ingest parses, sorts by order column and flags bad cells") {
  const DataSchemaFile f = tiny_file();
  const auto path = write_file("ok.csv",
                               "application_order,is_fraud,tenure,calls,band\n"
                               "3,0,1.5,2.5,A\n"
                               "1,1,0.25,,B\n"
                               "2,0,,4.5,\n"
                               "0,0,7.5,8.5,C\n");
  const LabeledDataset ds = ingest_csv(path, f);
  CHECK(ds.n_rows() == 4);
  CHECK(ds.fraud_count() == 1);
  CHECK(ds.fraud_rate() == 0.25);
  // rows come back ordered 0,1,2,3
  CHECK(ds.order_index == std::vector<int64_t>{0, 1, 2, 3});
  CHECK(ds.labels == std::vector<uint8_t>{0, 1, 0, 0});
  CHECK(ds.numeric_cols[0][0] == 7.5);
  CHECK(ds.numeric_cols[0][3] == 1.5);
  CHECK(std::isnan(ds.numeric_cols[1][1]));  // empty numeric cell = missing
  CHECK(std::isnan(ds.numeric_cols[0][2]));
  CHECK(ds.cat_cols[2] == std::vector<std::string>{"C", "B", "", "A"});
  CHECK_NOTHROW(ds.validate());

  const auto missing = write_file("missing_col.csv", "application_order,is_fraud,tenure,calls\n");
  CHECK_THROWS_WITH_AS(ingest_csv(missing, f), doctest::Contains("band"), Error);

  const auto badlabel = write_file("bad_label.csv",
                                   "application_order,is_fraud,tenure,calls,band\n"
                                   "0,2,1,1,A\n");
  CHECK_THROWS_AS(ingest_csv(badlabel, f), Error);

  const auto badnum = write_file("bad_numeric.csv",
                                 "application_order,is_fraud,tenure,calls,band\n"
                                 "0,0,oops,1,A\n");
  CHECK_THROWS_AS(ingest_csv(badnum, f), Error);
}

TEST_CASE("ingest keeps tied order rows in file order") {
  const DataSchemaFile f = tiny_file();
  const auto path = write_file("ties.csv",
                               "application_order,is_fraud,tenure,calls,band\n"
                               "5,1,1,1,A\n"
                               "5,0,2,2,B\n"
                               "1,0,3,3,C\n");
  const LabeledDataset ds = ingest_csv(path, f);
  CHECK(ds.order_index == std::vector<int64_t>{1, 5, 5});
  CHECK(ds.numeric_cols[0] == std::vector<double>{3, 1, 2});
  CHECK(ds.labels == std::vector<uint8_t>{0, 1, 0});
}

TEST_CASE("csv write then ingest round-trips a raw dataset exactly") {
  SynthSpec spec = complementary_spec(9);
  spec.n_rows = 300;
  spec.train_size = 200;
  const LabeledDataset ds = generate(spec);
  DataSchemaFile f;
  f.schema = ds.schema;
  const auto path = temp_file("roundtrip.csv");
  write_csv(ds, f, path);
  const LabeledDataset back = ingest_csv(path, f);
  REQUIRE(back.n_rows() == ds.n_rows());
  CHECK(back.labels == ds.labels);
  CHECK(back.order_index == ds.order_index);
  for (size_t c = 0; c < ds.n_cols(); ++c) {
    if (ds.schema.columns[c].kind == ColumnKind::numeric) {
      for (size_t i = 0; i < ds.n_rows(); ++i) CHECK(back.numeric_cols[c][i] == ds.numeric_cols[c][i]);
    } else {
      CHECK(back.cat_cols[c] == ds.cat_cols[c]);
    }
  }
}

TEST_CASE("missing markers survive the csv round-trip") {
  LabeledDataset ds;
  ds.schema = tiny_schema();
  ds.numeric_cols.resize(3);
  ds.cat_cols.resize(3);
  ds.numeric_cols[0] = {1.0, std::nan("")};
  ds.numeric_cols[1] = {std::nan(""), 2.0};
  ds.cat_cols[2] = {"", "B"};
  ds.labels = {0, 1};
  ds.order_index = {0, 1};
  DataSchemaFile f = tiny_file();
  const auto path = temp_file("missing_roundtrip.csv");
  write_csv(ds, f, path);
  const LabeledDataset back = ingest_csv(path, f);
  CHECK(back.numeric_cols[0][0] == 1.0);
  CHECK(std::isnan(back.numeric_cols[0][1]));
  CHECK(std::isnan(back.numeric_cols[1][0]));
  CHECK(back.cat_cols[2] == std::vector<std::string>{"", "B"});
}

TEST_CASE("one-hot encode expands categoricals and propagates missing") {
  LabeledDataset ds;
  ds.schema = tiny_schema();
  ds.numeric_cols.resize(3);
  ds.cat_cols.resize(3);
  ds.numeric_cols[0] = {0.5, 1.5, 2.5};
  ds.numeric_cols[1] = {5.0, 6.0, 7.0};
  ds.cat_cols[2] = {"B", "", "C"};
  ds.labels = {0, 1, 0};
  ds.order_index = {0, 1, 2};

  const LabeledDataset enc = encode(ds);
  CHECK(enc.encoded);
  REQUIRE(enc.n_cols() == 5);
  CHECK(enc.schema.columns[0].name == "tenure");
  CHECK(enc.schema.columns[2].name == "band=A");
  CHECK(enc.schema.columns[3].name == "band=B");
  CHECK(enc.schema.columns[4].name == "band=C");
  CHECK(enc.schema.columns[2].source == "band");
  CHECK(enc.schema.columns[0].source == "tenure");
  CHECK(enc.schema.columns[3].group == FeatureGroup::credit_bureau);
  // row 0: B -> (0,1,0)
  CHECK(enc.numeric_cols[2][0] == 0.0);
  CHECK(enc.numeric_cols[3][0] == 1.0);
  CHECK(enc.numeric_cols[4][0] == 0.0);
  // row 1: missing -> NaN in all indicators
  CHECK(std::isnan(enc.numeric_cols[2][1]));
  CHECK(std::isnan(enc.numeric_cols[3][1]));
  CHECK(std::isnan(enc.numeric_cols[4][1]));
  CHECK(enc.numeric_cols[4][2] == 1.0);
  CHECK(enc.numeric_cols[0] == ds.numeric_cols[0]);

  CHECK_THROWS_AS(encode(enc), Error);  // already encoded

  LabeledDataset unseen = ds;
  unseen.cat_cols[2][0] = "Z";
  CHECK_THROWS_WITH_AS(encode(unseen), doctest::Contains("Z"), Error);
}

TEST_CASE("paper-shape schema encodes 23 raw columns into 48") {
  const FeatureSchema s = paper_shape_schema();
  CHECK(s.columns.size() == 23);
  CHECK(s.encoded_column_count() == 48);
  size_t per_group[3] = {0, 0, 0};
  for (const auto& c : s.columns) per_group[static_cast<int>(c.group)]++;
  CHECK(per_group[static_cast<int>(FeatureGroup::super_app)] == 8);
  CHECK(per_group[static_cast<int>(FeatureGroup::mobile)] == 6);
  CHECK(per_group[static_cast<int>(FeatureGroup::credit_bureau)] == 9);
}

TEST_CASE("time split is chronological and exhaustive") {
  SynthSpec spec = complementary_spec(4);
  spec.n_rows = 10;
  spec.train_size = 5;
  spec.train_fraud_rate = 0.4;
  spec.test_fraud_rate = 0.4;
  const LabeledDataset ds = generate(spec);

  const auto [train, test] = time_split(ds, 0.6);
  CHECK(train.n_rows() == 6);
  CHECK(test.n_rows() == 4);
  CHECK(train.order_index.back() < test.order_index.front());
  CHECK(train.n_cols() == ds.n_cols());

  const auto [t2, v2] = time_split_at(ds, 9);
  CHECK(t2.n_rows() == 9);
  CHECK(v2.n_rows() == 1);

  CHECK_THROWS_AS(time_split(ds, 0.0), Error);
  CHECK_THROWS_AS(time_split(ds, 1.0), Error);
  CHECK_THROWS_AS(time_split(ds, 0.01), Error);  // floor -> empty train side
  CHECK_THROWS_AS(time_split_at(ds, 0), Error);
  CHECK_THROWS_AS(time_split_at(ds, 10), Error);
}

TEST_CASE("scenario selection keeps only the requested groups") {
  SynthSpec spec = complementary_spec(5);
  spec.n_rows = 50;
  spec.train_size = 30;
  const LabeledDataset raw = generate(spec);

  const LabeledDataset c_only = select_scenario(raw, Scenario::from_id("C"));
  CHECK(c_only.n_cols() == 9);
  const LabeledDataset sm = select_scenario(raw, Scenario::from_id("S+M"));
  CHECK(sm.n_cols() == 14);
  const LabeledDataset full = select_scenario(raw, Scenario::from_id("S+M+C"));
  CHECK(full.n_cols() == 23);
  CHECK(sm.labels == raw.labels);

  const LabeledDataset enc = encode(raw);
  CHECK(select_scenario(enc, Scenario::from_id("C")).n_cols() == 23);
  CHECK(select_scenario(enc, Scenario::from_id("S+M")).n_cols() == 25);
  CHECK(select_scenario(enc, Scenario::from_id("S+M+C")).n_cols() == 48);

  // selection preserves column order and values
  const LabeledDataset sel = select_scenario(enc, Scenario::from_id("S+C"));
  size_t expect = 0;
  for (size_t cidx = 0; cidx < enc.n_cols(); ++cidx) {
    const auto& col = enc.schema.columns[cidx];
    if (col.group == FeatureGroup::mobile) continue;
    CHECK(sel.schema.columns[expect].name == col.name);
    CHECK(sel.numeric_cols[expect] == enc.numeric_cols[cidx]);
    ++expect;
  }
  CHECK(expect == sel.n_cols());

  FeatureSchema sub;
  sub.columns.push_back({"only_s", FeatureGroup::super_app, ColumnKind::numeric, {}, ""});
  LabeledDataset sds;
  sds.schema = sub;
  sds.numeric_cols.resize(1, {1.0});
  sds.cat_cols.resize(1);
  sds.labels = {1};
  sds.order_index = {0};
  CHECK_THROWS_AS(select_scenario(sds, Scenario::from_id("C")), Error);
}

TEST_CASE("copy_row flattens encoded rows and rejects categoricals") {
  SynthSpec spec = complementary_spec(6);
  spec.n_rows = 20;
  spec.train_size = 10;
  const LabeledDataset raw = generate(spec);
  const LabeledDataset enc = encode(raw);
  std::vector<double> row(enc.n_cols());
  enc.copy_row(3, row.data());
  for (size_t c = 0; c < enc.n_cols(); ++c) CHECK(row[c] == enc.numeric_cols[c][3]);
  std::vector<double> raw_row(raw.n_cols());
  CHECK_THROWS_AS(raw.copy_row(0, raw_row.data()), Error);
}

TEST_CASE("format_double round-trips doubles exactly") {
  for (double x : {0.1, -1.0 / 3.0, 1e-300, 12345.678901234567, 0.0, -2.5e17}) {
    double back = 0.0;
    REQUIRE(parse_double(format_double(x), back));
    CHECK(back == x);
  }
  double v = 0.0;
  CHECK_FALSE(parse_double("12x", v));
  CHECK_FALSE(parse_double("", v));
  int64_t n = 0;
  CHECK(parse_int64("-42", n));
  CHECK(n == -42);
  CHECK_FALSE(parse_int64("4.2", n));
}
