#include "fraudfuse/app_config.hpp"

#include <fstream>
#include <set>

#include "fraudfuse/errors.hpp"
#include "json.hpp"

namespace fraudfuse {
namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::config, what); }

void check_keys(const ordered_json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) bad("unknown key '" + item.key() + "' in " + where);
  }
}

double as_number(const ordered_json& j, const std::string& where) {
  if (!j.is_number()) bad(where + " must be a number");
  return j.get<double>();
}

std::int64_t as_count(const ordered_json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(where + " must be an integer");
  return j.get<std::int64_t>();
}

std::string as_string(const ordered_json& j, const std::string& where) {
  if (!j.is_string()) bad(where + " must be a string");
  return j.get<std::string>();
}

std::size_t as_size(const ordered_json& j, const std::string& where) {
  const std::int64_t v = as_count(j, where);
  if (v < 0) bad(where + " must be non-negative");
  return static_cast<std::size_t>(v);
}

void parse_dataset(const ordered_json& j, AppConfig& cfg) {
  if (!j.is_object()) bad("'dataset' must be an object");
  check_keys(j, "'dataset'", {"csv", "schema"});
  if (!j.contains("csv") || !j.contains("schema"))
    bad("'dataset' needs both 'csv' and 'schema' paths");
  cfg.dataset_csv = std::filesystem::path(as_string(j["csv"], "dataset.csv"));
  cfg.schema_path = std::filesystem::path(as_string(j["schema"], "dataset.schema"));
}

void parse_synth(const ordered_json& j, AppConfig& cfg) {
  if (!j.is_object()) bad("'synth' must be an object");
  check_keys(j, "'synth'",
             {"preset", "schema_preset", "columns", "n_rows", "train_size", "train_fraud_rate",
              "test_fraud_rate", "group_signal", "noise_seed"});

  SynthSpec spec;
  if (j.contains("preset")) {
    const std::string preset = as_string(j["preset"], "synth.preset");
    if (preset == "paper_shape")
      spec = paper_shape_spec(0);
    else if (preset == "complementary")
      spec = complementary_spec(0);
    else
      bad("unknown synth preset '" + preset + "' (expected paper_shape or complementary)");
  } else {
    spec.schema = paper_shape_schema();
  }
  if (j.contains("schema_preset")) {
    const std::string sp = as_string(j["schema_preset"], "synth.schema_preset");
    if (sp != "paper_shape") bad("unknown synth schema_preset '" + sp + "'");
    spec.schema = paper_shape_schema();
  }
  if (j.contains("columns")) {
    ordered_json wrap;
    wrap["columns"] = j["columns"];
    try {
      spec.schema = schema_from_json(wrap);
    } catch (const Error& e) {
      bad("synth.columns: " + e.detail());
    }
  }
  if (j.contains("n_rows")) spec.n_rows = as_size(j["n_rows"], "synth.n_rows");
  if (j.contains("train_size")) spec.train_size = as_size(j["train_size"], "synth.train_size");
  if (j.contains("train_fraud_rate"))
    spec.train_fraud_rate = as_number(j["train_fraud_rate"], "synth.train_fraud_rate");
  if (j.contains("test_fraud_rate"))
    spec.test_fraud_rate = as_number(j["test_fraud_rate"], "synth.test_fraud_rate");
  if (j.contains("group_signal")) {
    const ordered_json& gs = j["group_signal"];
    if (!gs.is_object()) bad("synth.group_signal must be an object");
    spec.group_signal.clear();
    for (const auto& item : gs.items())
      spec.group_signal[group_from_string(item.key())] =
          as_number(item.value(), "synth.group_signal." + item.key());
  }
  if (j.contains("noise_seed")) {
    spec.noise_seed = static_cast<std::uint64_t>(as_count(j["noise_seed"], "synth.noise_seed"));
    cfg.synth_seed_explicit = true;
  }
  cfg.synth = std::move(spec);
}

void parse_split(const ordered_json& j, ExperimentConfig& exp) {
  if (!j.is_object()) bad("'split' must be an object");
  check_keys(j, "'split'", {"train_size", "train_fraction"});
  if (j.contains("train_size") && j.contains("train_fraction"))
    bad("'split' takes either train_size or train_fraction, not both");
  if (j.contains("train_size")) {
    const std::int64_t ts = as_count(j["train_size"], "split.train_size");
    if (ts <= 0) bad("split.train_size must be positive");
    exp.train_size = static_cast<std::size_t>(ts);
  }
  if (j.contains("train_fraction"))
    exp.train_fraction = as_number(j["train_fraction"], "split.train_fraction");
}

void parse_params(const ordered_json& j, GbdtParams& p) {
  if (!j.is_object()) bad("'params' must be an object");
  check_keys(j, "'params'",
             {"n_trees", "learning_rate", "max_depth", "min_child_weight", "l2_reg", "subsample",
              "n_bins", "pos_weight"});
  if (j.contains("n_trees")) p.n_trees = as_size(j["n_trees"], "params.n_trees");
  if (j.contains("learning_rate"))
    p.learning_rate = as_number(j["learning_rate"], "params.learning_rate");
  if (j.contains("max_depth")) p.max_depth = as_size(j["max_depth"], "params.max_depth");
  if (j.contains("min_child_weight"))
    p.min_child_weight = as_number(j["min_child_weight"], "params.min_child_weight");
  if (j.contains("l2_reg")) p.l2_reg = as_number(j["l2_reg"], "params.l2_reg");
  if (j.contains("subsample")) p.subsample = as_number(j["subsample"], "params.subsample");
  if (j.contains("n_bins")) p.n_bins = as_size(j["n_bins"], "params.n_bins");
  if (j.contains("pos_weight")) p.pos_weight = as_number(j["pos_weight"], "params.pos_weight");
}

void parse_grid(const ordered_json& j, GridSpec& grid) {
  if (!j.is_object()) bad("'grid' must be an object of axis arrays");
  grid.axes.clear();
  for (const auto& item : j.items()) {
    if (!item.value().is_array() || item.value().empty())
      bad("grid axis '" + item.key() + "' must be a non-empty array");
    std::vector<double> values;
    for (const auto& v : item.value())
      values.push_back(as_number(v, "grid." + item.key() + " entry"));
    grid.axes.emplace_back(item.key(), std::move(values));
  }
  if (grid.axes.empty()) bad("'grid' must declare at least one axis");
}

void parse_costs(const ordered_json& j, CostParams& costs) {
  if (!j.is_object()) bad("'costs' must be an object");
  check_keys(j, "'costs'", {"acl", "clv", "churn_prob"});
  if (j.contains("acl")) costs.acl = as_number(j["acl"], "costs.acl");
  if (j.contains("clv")) costs.clv = as_number(j["clv"], "costs.clv");
  if (j.contains("churn_prob"))
    costs.churn_given_reject = as_number(j["churn_prob"], "costs.churn_prob");
}

void parse_scenarios(const ordered_json& j, std::vector<Scenario>& out) {
  if (!j.is_array() || j.empty()) bad("'scenarios' must be a non-empty array of ids");
  out.clear();
  for (const auto& v : j) out.push_back(Scenario::from_id(as_string(v, "scenarios entry")));
}

}  // namespace

AppConfig load_app_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config file '" + path.string() + "'");
  ordered_json j;
  try {
    in >> j;
  } catch (const ordered_json::exception& e) {
    bad("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) bad("config file '" + path.string() + "' must hold a JSON object");
  check_keys(j, "config",
             {"dataset", "synth", "split", "params", "grid", "holdout_fraction", "costs",
              "n_bootstrap", "scenarios", "seed", "out"});

  AppConfig cfg;
  if (j.contains("dataset")) parse_dataset(j["dataset"], cfg);
  if (j.contains("synth")) parse_synth(j["synth"], cfg);
  if (j.contains("split")) parse_split(j["split"], cfg.experiment);
  if (j.contains("params")) parse_params(j["params"], cfg.experiment.base_params);
  if (j.contains("grid")) parse_grid(j["grid"], cfg.experiment.grid);
  if (j.contains("holdout_fraction"))
    cfg.experiment.holdout_fraction = as_number(j["holdout_fraction"], "holdout_fraction");
  if (j.contains("costs")) parse_costs(j["costs"], cfg.experiment.costs);
  if (j.contains("n_bootstrap")) {
    const std::int64_t n = as_count(j["n_bootstrap"], "n_bootstrap");
    if (n < 0) bad("n_bootstrap must be non-negative");
    cfg.experiment.n_bootstrap = static_cast<std::size_t>(n);
  }
  if (j.contains("scenarios")) parse_scenarios(j["scenarios"], cfg.experiment.scenarios);
  if (j.contains("seed"))
    cfg.experiment.master_seed = static_cast<std::uint64_t>(as_count(j["seed"], "seed"));
  if (j.contains("out")) cfg.experiment.output_dir = as_string(j["out"], "out");

  if (cfg.experiment.grid.axes.empty()) cfg.experiment.grid = default_grid();
  if (cfg.synth && !cfg.synth_seed_explicit)
    cfg.synth->noise_seed = cfg.experiment.master_seed;
  return cfg;
}

}  // namespace fraudfuse
