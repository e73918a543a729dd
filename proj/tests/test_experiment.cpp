#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fraudfuse/app_config.hpp"
#include "fraudfuse/csv.hpp"
#include "fraudfuse/errors.hpp"
#include "fraudfuse/experiment.hpp"
#include "fraudfuse/synthgen.hpp"
#include "json.hpp"

using namespace fraudfuse;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fraudfuse_experiment_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabeledDataset small_encoded(uint64_t seed) {
  SynthSpec spec = complementary_spec(seed);
  spec.n_rows = 1600;
  spec.train_size = 1000;
  spec.train_fraud_rate = 0.08;
  spec.test_fraud_rate = 0.06;
  return encode(generate(spec));
}

ExperimentConfig small_config(const std::filesystem::path& out) {
  ExperimentConfig cfg;
  cfg.scenarios = {Scenario::from_id("S"), Scenario::from_id("S+M")};
  cfg.train_size = 1000;
  cfg.base_params.n_trees = 15;
  cfg.base_params.max_depth = 3;
  cfg.base_params.learning_rate = 0.3;
  cfg.grid.axes.emplace_back("n_trees", std::vector<double>{15});
  cfg.holdout_fraction = 0.25;
  cfg.n_bootstrap = 20;
  cfg.master_seed = 11;
  cfg.output_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("experiment config validation") {
  ExperimentConfig cfg = small_config(temp_dir("validate"));
  CHECK_NOTHROW(cfg.validate());
  cfg.scenarios.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config(temp_dir("validate"));
  cfg.scenarios.push_back(cfg.scenarios[0]);
  CHECK_THROWS_AS(cfg.validate(), Error);  // duplicate scenario
  cfg = small_config(temp_dir("validate"));
  cfg.n_bootstrap = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config(temp_dir("validate"));
  cfg.grid.axes.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config(temp_dir("validate"));
  cfg.output_dir.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config(temp_dir("validate"));
  cfg.train_size.reset();
  cfg.train_fraction = 1.2;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("run_experiment produces per-scenario results and artifacts") {
  const auto out = temp_dir("run");
  const LabeledDataset ds = small_encoded(3);
  const ExperimentConfig cfg = small_config(out);
  const std::vector<ScenarioResult> results = run_experiment(ds, cfg);
  REQUIRE(results.size() == 2);
  CHECK(results[0].scenario.id == "S");
  CHECK(results[1].scenario.id == "S+M");
  for (const ScenarioResult& r : results) {
    CHECK(std::filesystem::exists(r.model_path));
    CHECK(r.metrics.n_replicates == 20);
    CHECK(r.validation_auc > 0.5);
    CHECK(r.metrics.auc.mean > 0.5);
    CHECK(!r.importance.entries.empty());
    CHECK(!r.importance_by_source.entries.empty());
    CHECK(r.importance_by_source.entries.size() <= r.importance.entries.size());
    const GbdtModel m = load_model(r.model_path);
    CHECK(m.params.n_trees == 15);
  }

  LabeledDataset raw;
  CHECK_THROWS_AS(run_experiment(raw, cfg), Error);  // not encoded / empty
}

TEST_CASE("experiment outputs are byte-stable and scenario-local") {
  const LabeledDataset ds = small_encoded(4);

  const auto out_a = temp_dir("stable_a");
  const auto out_b = temp_dir("stable_b");
  render_report(run_experiment(ds, small_config(out_a)), small_config(out_a));
  render_report(run_experiment(ds, small_config(out_b)), small_config(out_b));
  for (const char* name : {"report.csv", "report.txt", "loss_plot.csv", "manifest.json",
                           "model_S.json", "model_S+M.json", "importance_S.csv",
                           "importance_by_source_S+M.csv"}) {
    CHECK(slurp(out_a / name) == slurp(out_b / name));
  }

  // dropping the other scenario must not move S+M's artifacts
  const auto out_c = temp_dir("stable_c");
  ExperimentConfig solo = small_config(out_c);
  solo.scenarios = {Scenario::from_id("S+M")};
  run_experiment(ds, solo);
  CHECK(slurp(out_a / "model_S+M.json") == slurp(out_c / "model_S+M.json"));
}

TEST_CASE("report files carry the advertised shapes") {
  const auto out = temp_dir("report");
  const LabeledDataset ds = small_encoded(5);
  const ExperimentConfig cfg = small_config(out);
  render_report(run_experiment(ds, cfg), cfg);

  CsvReader report(out / "report.csv");
  CHECK(report.header() ==
        std::vector<std::string>{"Scenario", "AUC", "F1", "Precision", "Recall", "FinancialLoss"});
  std::vector<std::string> row;
  size_t rows = 0;
  std::vector<std::string> ids;
  while (report.next_row(row)) {
    ++rows;
    ids.push_back(row[0]);
    for (size_t c = 1; c < row.size(); ++c) {
      CHECK(row[c].find("\xC2\xB1") != std::string::npos);  // mean±std
    }
  }
  CHECK(rows == 2);
  CHECK(ids == std::vector<std::string>{"S", "S+M"});

  CsvReader loss(out / "loss_plot.csv");
  CHECK(loss.header() ==
        std::vector<std::string>{"scenario", "financial_loss_mean", "financial_loss_std"});
  REQUIRE(loss.next_row(row));
  double mean = 0.0;
  CHECK(parse_double(row[1], mean));

  const std::string txt = slurp(out / "report.txt");
  CHECK(txt.find("Scenario") != std::string::npos);
  CHECK(txt.find("S+M") != std::string::npos);

  nlohmann::json manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["tool"] == "fraudfuse");
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["master_seed"] == 11);
  CHECK(manifest["scenarios"].size() == 2);
  CHECK(manifest["scenarios"][0]["scenario"] == "S");
  CHECK(manifest["scenarios"][0].contains("threshold"));
  CHECK(manifest["scenarios"][0]["model"] == "model_S.json");
  CHECK(manifest["costs"]["acl"] == 5000.0);
  CHECK_FALSE(manifest.contains("timestamp"));

  CsvReader imp(out / "importance_S+M.csv");
  CHECK(imp.header() == std::vector<std::string>{"rank", "feature", "group", "mean_abs_shap"});
  size_t imp_rows = 0;
  double prev = 1e300;
  while (imp.next_row(row)) {
    ++imp_rows;
    double v = 0.0;
    REQUIRE(parse_double(row[3], v));
    CHECK(v <= prev);
    prev = v;
  }
  CHECK(imp_rows == 25);  // encoded S+M column count
}

TEST_CASE("app config parses presets, grids and overrides") {
  const auto dir = temp_dir("config");
  const auto path = dir / "run.json";
  std::ofstream(path) << R"({
    "synth": {"preset": "complementary", "n_rows": 2000, "train_size": 1200,
               "group_signal": {"super_app": 0.9, "mobile": 0.2, "credit_bureau": 0.4}},
    "split": {"train_size": 1200},
    "params": {"n_trees": 33, "learning_rate": 0.25},
    "grid": {"max_depth": [5, 3], "learning_rate": [0.2]},
    "holdout_fraction": 0.3,
    "costs": {"acl": 900, "churn_prob": 0.5},
    "n_bootstrap": 17,
    "scenarios": ["M", "S+C"],
    "seed": 99,
    "out": "some/dir"
  })";

  const AppConfig cfg = load_app_config(path);
  REQUIRE(cfg.synth.has_value());
  CHECK(cfg.synth->n_rows == 2000);
  CHECK(cfg.synth->train_size == 1200);
  CHECK(cfg.synth->group_signal.at(FeatureGroup::super_app) == 0.9);
  CHECK(cfg.synth->noise_seed == 99);  // master seed flows into an unseeded synth block
  CHECK_FALSE(cfg.synth_seed_explicit);
  REQUIRE(cfg.experiment.train_size.has_value());
  CHECK(*cfg.experiment.train_size == 1200);
  CHECK(cfg.experiment.base_params.n_trees == 33);
  CHECK(cfg.experiment.base_params.learning_rate == 0.25);
  REQUIRE(cfg.experiment.grid.axes.size() == 2);
  CHECK(cfg.experiment.grid.axes[0].first == "max_depth");  // file order, not alphabetical
  CHECK(cfg.experiment.grid.axes[0].second == std::vector<double>{5, 3});
  CHECK(cfg.experiment.holdout_fraction == 0.3);
  CHECK(cfg.experiment.costs.acl == 900.0);
  CHECK(cfg.experiment.costs.clv == 1500.0);  // untouched default
  CHECK(cfg.experiment.costs.churn_given_reject == 0.5);
  CHECK(cfg.experiment.n_bootstrap == 17);
  REQUIRE(cfg.experiment.scenarios.size() == 2);
  CHECK(cfg.experiment.scenarios[1].id == "S+C");
  CHECK(cfg.experiment.master_seed == 99);
  CHECK(cfg.experiment.output_dir == std::filesystem::path("some/dir"));

  const auto explicit_seed = dir / "seeded.json";
  std::ofstream(explicit_seed) << R"({"synth": {"preset": "complementary", "noise_seed": 7}})";
  const AppConfig seeded = load_app_config(explicit_seed);
  CHECK(seeded.synth_seed_explicit);
  CHECK(seeded.synth->noise_seed == 7);

  const auto defaults = dir / "defaults.json";
  std::ofstream(defaults) << R"({"synth": {"preset": "paper_shape"}})";
  const AppConfig d = load_app_config(defaults);
  CHECK(d.experiment.scenarios.size() == 6);
  CHECK(d.experiment.grid.axes.size() == 4);  // documented default grid
  CHECK(d.experiment.n_bootstrap == 100);
  CHECK(d.synth->n_rows == 86726);
}

TEST_CASE("app config rejects malformed files") {
  const auto dir = temp_dir("badconfig");
  auto write = [&](const std::string& name, const std::string& body) {
    const auto p = dir / name;
    std::ofstream(p) << body;
    return p;
  };
  CHECK_THROWS_AS(load_app_config(dir / "missing.json"), Error);
  CHECK_THROWS_AS(load_app_config(write("notjson.json", "{")), Error);
  CHECK_THROWS_AS(load_app_config(write("top.json", R"({"surprise": 1})")), Error);
  CHECK_THROWS_AS(load_app_config(write("synth.json", R"({"synth": {"preset": "nope"}})")), Error);
  CHECK_THROWS_AS(
      load_app_config(write("split.json", R"({"split": {"train_size": 5, "train_fraction": 0.5}})")),
      Error);
  CHECK_THROWS_AS(load_app_config(write("grid.json", R"({"grid": {"max_depth": []}})")), Error);
  CHECK_THROWS_AS(load_app_config(write("grid2.json", R"({"grid": {}})")), Error);
  CHECK_THROWS_AS(load_app_config(write("sc.json", R"({"scenarios": ["Q"]})")), Error);
  CHECK_THROWS_AS(load_app_config(write("ds.json", R"({"dataset": {"csv": "x.csv"}})")), Error);
  CHECK_THROWS_AS(
      load_app_config(write("params.json", R"({"params": {"n_trees": "many"}})")), Error);
  CHECK_THROWS_AS(
      load_app_config(write("neg.json", R"({"params": {"n_trees": -3}})")), Error);
  for (const char* name :
       {"missing.json", "notjson.json", "top.json", "synth.json", "split.json"}) {
    try {
      load_app_config(dir / name);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config);
    }
  }
}

TEST_CASE("grid default covers the documented axes") {
  const GridSpec g = default_grid();
  REQUIRE(g.axes.size() == 4);
  CHECK(g.axes[0].first == "learning_rate");
  CHECK(g.axes[1].first == "max_depth");
  CHECK(g.axes[2].first == "n_trees");
  CHECK(g.axes[3].first == "min_child_weight");
  size_t points = 1;
  for (const auto& [name, values] : g.axes) points *= values.size();
  CHECK(points == 36);
}
