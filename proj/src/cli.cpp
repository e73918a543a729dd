#include "fraudfuse/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "fraudfuse/app_config.hpp"
#include "fraudfuse/csv.hpp"
#include "fraudfuse/errors.hpp"
#include "fraudfuse/rng.hpp"
#include "fraudfuse/threading.hpp"
#include "fraudfuse/version.hpp"
#include "json.hpp"

namespace fraudfuse {
namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::schema:
    case ErrorKind::argument:
      return 2;
    default:
      return 1;
  }
}

// Flag values for one subcommand; Option pointers tell overrides from defaults.
struct CmdOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string scenarios;
  double acl = 0.0;
  double clv = 0.0;
  double churn_prob = 0.0;
  std::string model_path;
  std::string rows = "all";

  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* scenarios_opt = nullptr;
  CLI::Option* acl_opt = nullptr;
  CLI::Option* clv_opt = nullptr;
  CLI::Option* churn_opt = nullptr;
};

void add_common_flags(CLI::App* cmd, CmdOpts& o) {
  cmd->add_option("--config", o.config_path,
                  "run configuration JSON (default: $FRAUDFUSE_CONFIG)")
      ->envname("FRAUDFUSE_CONFIG");
  o.seed_opt = cmd->add_option("--seed", o.seed, "override the master seed");
  o.threads_opt = cmd->add_option("--threads", o.threads, "worker thread count (>= 1)");
  o.out_opt = cmd->add_option("--out", o.out, "override the output directory");
}

void add_scenario_flag(CLI::App* cmd, CmdOpts& o) {
  o.scenarios_opt = cmd->add_option("--scenarios", o.scenarios,
                                    "comma-separated scenario ids (e.g. C,S+M,S+M+C)");
}

void add_cost_flags(CLI::App* cmd, CmdOpts& o) {
  o.acl_opt = cmd->add_option("--acl", o.acl, "average credit loss per missed fraud");
  o.clv_opt = cmd->add_option("--clv", o.clv, "customer lifetime value");
  o.churn_opt = cmd->add_option("--churn-prob", o.churn_prob,
                                "churn probability for a rejected legitimate applicant");
}

std::vector<Scenario> parse_scenario_list(const std::string& csv) {
  std::vector<Scenario> out;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) throw Error(ErrorKind::argument, "empty scenario id in --scenarios");
    out.push_back(Scenario::from_id(token));
  }
  if (out.empty()) throw Error(ErrorKind::argument, "--scenarios lists no scenarios");
  return out;
}

AppConfig load_with_overrides(const CmdOpts& o) {
  if (o.threads_opt && o.threads_opt->count()) {
    if (o.threads < 1) throw Error(ErrorKind::argument, "--threads must be >= 1");
    ThreadPool::global().resize(static_cast<unsigned>(o.threads));
  }
  if (o.config_path.empty()) {
    throw Error(ErrorKind::config,
                "no configuration file given (use --config or set FRAUDFUSE_CONFIG)");
  }
  AppConfig cfg = load_app_config(o.config_path);
  if (o.seed_opt && o.seed_opt->count()) {
    cfg.experiment.master_seed = o.seed;
    if (cfg.synth && !cfg.synth_seed_explicit) cfg.synth->noise_seed = o.seed;
  }
  if (o.out_opt && o.out_opt->count()) cfg.experiment.output_dir = o.out;
  if (o.scenarios_opt && o.scenarios_opt->count()) {
    cfg.experiment.scenarios = parse_scenario_list(o.scenarios);
  }
  if (o.acl_opt && o.acl_opt->count()) cfg.experiment.costs.acl = o.acl;
  if (o.clv_opt && o.clv_opt->count()) cfg.experiment.costs.clv = o.clv;
  if (o.churn_opt && o.churn_opt->count()) cfg.experiment.costs.churn_given_reject = o.churn_prob;
  return cfg;
}

LabeledDataset resolve_raw_dataset(const AppConfig& cfg) {
  if (cfg.dataset_csv) {
    const DataSchemaFile file = load_schema_file(*cfg.schema_path);
    return ingest_csv(*cfg.dataset_csv, file);
  }
  if (cfg.synth) return generate(*cfg.synth);
  throw Error(ErrorKind::config, "config needs a 'dataset' or 'synth' section");
}

std::filesystem::path require_out_dir(const AppConfig& cfg) {
  if (cfg.experiment.output_dir.empty()) {
    throw Error(ErrorKind::config, "no output directory (set 'out' in the config or pass --out)");
  }
  std::error_code ec;
  std::filesystem::create_directories(cfg.experiment.output_dir, ec);
  if (ec) {
    throw Error(ErrorKind::io, "cannot create output directory " +
                                   cfg.experiment.output_dir.string() + ": " + ec.message());
  }
  return cfg.experiment.output_dir;
}

std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * x);
  return buf;
}

void print_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::cout << in.rdbuf();
}

std::pair<LabeledDataset, LabeledDataset> split_encoded(const AppConfig& cfg,
                                                        const LabeledDataset& encoded) {
  return cfg.experiment.train_size ? time_split_at(encoded, *cfg.experiment.train_size)
                                   : time_split(encoded, cfg.experiment.train_fraction);
}

void cmd_generate(const CmdOpts& o) {
  const AppConfig cfg = load_with_overrides(o);
  if (!cfg.synth) throw Error(ErrorKind::config, "generate needs a 'synth' section in the config");
  const std::filesystem::path dir = require_out_dir(cfg);

  const LabeledDataset ds = generate(*cfg.synth);
  DataSchemaFile file;
  file.schema = ds.schema;
  write_csv(ds, file, dir / "dataset.csv");
  save_schema_file(file, dir / "schema.json");

  const size_t train_n = cfg.synth->train_size;
  size_t train_fraud = 0;
  for (size_t i = 0; i < train_n; ++i) train_fraud += ds.labels[i];
  const size_t test_n = ds.n_rows() - train_n;
  const size_t test_fraud = ds.fraud_count() - train_fraud;

  std::cout << "wrote " << (dir / "dataset.csv").string() << " and "
            << (dir / "schema.json").string() << "\n";
  std::cout << "rows: " << ds.n_rows() << " (" << ds.schema.columns.size() << " columns)\n";
  std::cout << "train: " << train_n << " rows, " << train_fraud << " fraud ("
            << pct(static_cast<double>(train_fraud) / static_cast<double>(train_n)) << ")\n";
  std::cout << "test: " << test_n << " rows, " << test_fraud << " fraud ("
            << pct(static_cast<double>(test_fraud) / static_cast<double>(test_n)) << ")\n";
}

void cmd_train(const CmdOpts& o) {
  const AppConfig cfg = load_with_overrides(o);
  cfg.experiment.validate();
  const std::filesystem::path dir = require_out_dir(cfg);

  const LabeledDataset encoded = encode(resolve_raw_dataset(cfg));
  const auto [train, test] = split_encoded(cfg, encoded);
  std::cout << "train rows: " << train.n_rows() << " (" << pct(train.fraud_rate())
            << " fraud), test rows: " << test.n_rows() << " (" << pct(test.fraud_rate())
            << " fraud)\n";

  for (const Scenario& sc : cfg.experiment.scenarios) {
    try {
      const LabeledDataset sel_train = select_scenario(train, sc);
      GbdtParams base = cfg.experiment.base_params;
      base.seed = derive_seed(cfg.experiment.master_seed, sc.id, "grid");
      const GridResult gr =
          grid_search(sel_train, base, cfg.experiment.grid, cfg.experiment.holdout_fraction);
      GbdtParams best = gr.best;
      best.seed = derive_seed(cfg.experiment.master_seed, sc.id, "fit");
      const GbdtModel model = fit(sel_train, best);
      const std::filesystem::path path = dir / ("model_" + sc.id + ".json");
      save_model(model, path);
      std::cout << "trained " << sc.id << ": holdout auc " << format_double(gr.best_auc) << ", "
                << best.describe() << " -> " << path.string() << "\n";
    } catch (const Error& e) {
      throw Error(e.kind(), "scenario " + sc.id + ": " + e.detail());
    }
  }
}

void cmd_evaluate(const CmdOpts& o) {
  const AppConfig cfg = load_with_overrides(o);
  cfg.experiment.validate();
  const std::filesystem::path dir = require_out_dir(cfg);

  const LabeledDataset encoded = encode(resolve_raw_dataset(cfg));
  const auto [train, test] = split_encoded(cfg, encoded);
  (void)train;

  std::vector<ScenarioResult> results;
  for (const Scenario& sc : cfg.experiment.scenarios) {
    try {
      const std::filesystem::path path = dir / ("model_" + sc.id + ".json");
      const GbdtModel model = load_model(path);
      const LabeledDataset sel_test = select_scenario(test, sc);
      const std::vector<double> scores = model.predict_score(sel_test);

      ScenarioResult res;
      res.scenario = sc;
      res.best_params = model.params;
      res.validation_auc = std::numeric_limits<double>::quiet_NaN();  // no tuning in this stage
      res.model_path = path;
      res.metrics =
          bootstrap_evaluate(scores, sel_test.labels, cfg.experiment.costs,
                             cfg.experiment.n_bootstrap,
                             derive_seed(cfg.experiment.master_seed, sc.id, "bootstrap"));
      results.push_back(std::move(res));
    } catch (const Error& e) {
      throw Error(e.kind(), "scenario " + sc.id + ": " + e.detail());
    }
  }
  render_report(results, cfg.experiment);
  print_file(dir / "report.txt");
}

// Matches a saved model back to the scenario selection it was trained on by
// schema fingerprint.
LabeledDataset match_model_columns(const GbdtModel& model, const LabeledDataset& encoded) {
  for (const Scenario& sc : Scenario::all_six()) {
    LabeledDataset sel;
    try {
      sel = select_scenario(encoded, sc);
    } catch (const Error&) {
      continue;  // scenario selects no columns of this schema
    }
    if (schema_fingerprint(sel.schema) == model.schema_fp) return sel;
  }
  throw Error(ErrorKind::schema,
              "model schema fingerprint " + fingerprint_hex(model.schema_fp) +
                  " matches no scenario selection of this dataset (encoded fingerprint " +
                  fingerprint_hex(schema_fingerprint(encoded.schema)) + ")");
}

void cmd_explain(const CmdOpts& o) {
  const AppConfig cfg = load_with_overrides(o);
  const std::filesystem::path dir = require_out_dir(cfg);
  const GbdtModel model = load_model(o.model_path);

  const LabeledDataset encoded = encode(resolve_raw_dataset(cfg));
  LabeledDataset sel;
  if (o.scenarios_opt && o.scenarios_opt->count()) {
    const std::vector<Scenario> list = parse_scenario_list(o.scenarios);
    if (list.size() != 1) {
      throw Error(ErrorKind::argument, "explain takes a single scenario in --scenarios");
    }
    sel = select_scenario(encoded, list[0]);
  } else {
    sel = match_model_columns(model, encoded);
  }

  if (o.rows == "all") {
    const GlobalImportance imp = global_importance(model, sel);
    const GlobalImportance by_source = aggregate_importance_by_source(imp, sel.schema);
    {
      CsvWriter w(dir / "importance.csv");
      w.write_row({"rank", "feature", "group", "mean_abs_shap"});
      for (size_t i = 0; i < imp.entries.size(); ++i) {
        const ImportanceEntry& e = imp.entries[i];
        w.write_row({std::to_string(i + 1), e.feature, to_string(e.group),
                     format_double(e.mean_abs_shap)});
      }
      w.close();
    }
    {
      CsvWriter w(dir / "importance_by_source.csv");
      w.write_row({"rank", "feature", "group", "mean_abs_shap"});
      for (size_t i = 0; i < by_source.entries.size(); ++i) {
        const ImportanceEntry& e = by_source.entries[i];
        w.write_row({std::to_string(i + 1), e.feature, to_string(e.group),
                     format_double(e.mean_abs_shap)});
      }
      w.close();
    }
    std::cout << "mean |phi| over " << sel.n_rows() << " rows, "
              << imp.entries.size() << " features -> " << (dir / "importance.csv").string()
              << "\n";
    const size_t top = std::min<size_t>(10, by_source.entries.size());
    for (size_t i = 0; i < top; ++i) {
      const ImportanceEntry& e = by_source.entries[i];
      std::cout << "  " << (i + 1) << ". " << e.feature << " [" << to_string(e.group) << "] "
                << format_double(e.mean_abs_shap) << "\n";
    }
    return;
  }

  std::int64_t row = 0;
  if (!parse_int64(o.rows, row)) {
    throw Error(ErrorKind::argument, "--rows takes 'all' or a row index, got '" + o.rows + "'");
  }
  if (row < 0 || static_cast<size_t>(row) >= sel.n_rows()) {
    throw Error(ErrorKind::argument, "row index " + o.rows + " out of range (dataset has " +
                                         std::to_string(sel.n_rows()) + " rows)");
  }
  std::vector<double> x(sel.n_cols());
  sel.copy_row(static_cast<size_t>(row), x.data());
  const ShapExplanation ex = tree_shap(model, x.data());

  const std::filesystem::path path = dir / ("explanation_row_" + std::to_string(row) + ".csv");
  {
    CsvWriter w(path);
    w.write_row({"feature", "group", "value", "phi"});
    for (size_t f = 0; f < ex.phi.size(); ++f) {
      w.write_row({sel.schema.columns[f].name, to_string(sel.schema.columns[f].group),
                   format_double(x[f]), format_double(ex.phi[f])});
    }
    w.close();
  }

  double phi_sum = 0.0;
  for (double p : ex.phi) phi_sum += p;
  const double gap = std::abs(ex.base_value + phi_sum - ex.prediction_margin);
  std::cout << "row " << row << ": margin " << format_double(ex.prediction_margin) << ", score "
            << format_double(1.0 / (1.0 + std::exp(-ex.prediction_margin))) << ", base "
            << format_double(ex.base_value) << "\n";
  std::cout << "efficiency |base + sum(phi) - margin| = " << format_double(gap) << "\n";
  std::cout << "wrote " << path.string() << "\n";

  // Ten largest attributions either way.
  std::vector<size_t> idx(ex.phi.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return std::abs(ex.phi[a]) > std::abs(ex.phi[b]);
  });
  const size_t top = std::min<size_t>(10, idx.size());
  for (size_t i = 0; i < top; ++i) {
    const size_t f = idx[i];
    std::cout << "  " << sel.schema.columns[f].name << " = " << format_double(x[f]) << ": phi "
              << format_double(ex.phi[f]) << "\n";
  }
}

void write_failure_manifest(const AppConfig& cfg, const Error& e) {
  if (cfg.experiment.output_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(cfg.experiment.output_dir, ec);
  if (ec) return;
  nlohmann::ordered_json j;
  j["tool"] = "fraudfuse";
  j["version"] = kVersion;
  j["status"] = "failed";
  j["error"]["kind"] = to_string(e.kind());
  j["error"]["message"] = e.detail();
  std::ofstream out(cfg.experiment.output_dir / "manifest.json", std::ios::binary);
  if (out) out << j.dump(2) << "\n";
}

void cmd_compare(const CmdOpts& o) {
  const AppConfig cfg = load_with_overrides(o);
  try {
    const LabeledDataset encoded = encode(resolve_raw_dataset(cfg));
    const std::vector<ScenarioResult> results = run_experiment(encoded, cfg.experiment);
    render_report(results, cfg.experiment);
  } catch (const Error& e) {
    write_failure_manifest(cfg, e);
    throw;
  }
  print_file(cfg.experiment.output_dir / "report.txt");
  std::cout << "report written to " << cfg.experiment.output_dir.string() << "\n";
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"cost-sensitive fraud-detection experiments over fused data sources"};
  app.set_version_flag("--version", std::string("fraudfuse ") + kVersion);
  app.require_subcommand(1);

  CmdOpts gen_o, train_o, eval_o, explain_o, compare_o;

  CLI::App* gen = app.add_subcommand("generate", "draw a synthetic dataset and write CSV + schema");
  add_common_flags(gen, gen_o);
  gen->callback([&] { cmd_generate(gen_o); });

  CLI::App* train = app.add_subcommand("train", "grid-search and fit one model per scenario");
  add_common_flags(train, train_o);
  add_scenario_flag(train, train_o);
  train->callback([&] { cmd_train(train_o); });

  CLI::App* eval = app.add_subcommand("evaluate", "score saved models and bootstrap the metrics");
  add_common_flags(eval, eval_o);
  add_scenario_flag(eval, eval_o);
  add_cost_flags(eval, eval_o);
  eval->callback([&] { cmd_evaluate(eval_o); });

  CLI::App* expl = app.add_subcommand("explain", "per-row attributions or global importance");
  add_common_flags(expl, explain_o);
  add_scenario_flag(expl, explain_o);
  expl->add_option("--model", explain_o.model_path, "saved model JSON")->required();
  expl->add_option("--rows", explain_o.rows, "'all' for global importance, or one row index");
  expl->callback([&] { cmd_explain(explain_o); });

  CLI::App* cmp = app.add_subcommand("compare", "full pipeline: train, evaluate and rank scenarios");
  add_common_flags(cmp, compare_o);
  add_scenario_flag(cmp, compare_o);
  add_cost_flags(cmp, compare_o);
  cmp->callback([&] { cmd_compare(compare_o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "fraudfuse: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "fraudfuse: unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace fraudfuse
