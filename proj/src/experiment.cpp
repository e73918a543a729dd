#include "fraudfuse/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "fraudfuse/csv.hpp"
#include "fraudfuse/errors.hpp"
#include "fraudfuse/rng.hpp"
#include "fraudfuse/version.hpp"

namespace fraudfuse {

GridSpec default_grid() {
  GridSpec grid;
  grid.axes.emplace_back("learning_rate", std::vector<double>{0.05, 0.1, 0.3});
  grid.axes.emplace_back("max_depth", std::vector<double>{3, 5, 7});
  grid.axes.emplace_back("n_trees", std::vector<double>{100, 300});
  grid.axes.emplace_back("min_child_weight", std::vector<double>{1, 10});
  return grid;
}

void ExperimentConfig::validate() const {
  if (scenarios.empty()) throw Error(ErrorKind::config, "no scenarios configured");
  std::set<std::string> ids;
  for (const Scenario& sc : scenarios) {
    if (!ids.insert(sc.id).second) {
      throw Error(ErrorKind::config, "duplicate scenario " + sc.id);
    }
  }
  if (!train_size && !(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::config, "train_fraction must be in (0,1)");
  }
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw Error(ErrorKind::config, "holdout_fraction must be in (0,1)");
  }
  if (n_bootstrap < 2) throw Error(ErrorKind::config, "n_bootstrap must be >= 2");
  if (grid.axes.empty()) throw Error(ErrorKind::config, "hyperparameter grid is empty");
  if (output_dir.empty()) throw Error(ErrorKind::config, "output_dir not set");
  base_params.validate();
  costs.validate();
}

std::vector<ScenarioResult> run_experiment(const LabeledDataset& dataset,
                                           const ExperimentConfig& config) {
  config.validate();
  if (!dataset.encoded) {
    throw Error(ErrorKind::argument, "run_experiment needs an encoded dataset");
  }

  auto [train, test] = config.train_size ? time_split_at(dataset, *config.train_size)
                                         : time_split(dataset, config.train_fraction);

  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) {
    throw Error(ErrorKind::io,
                "cannot create output directory " + config.output_dir.string() + ": " + ec.message());
  }

  std::vector<ScenarioResult> results;
  for (const Scenario& sc : config.scenarios) {
    try {
      const LabeledDataset sel_train = select_scenario(train, sc);
      const LabeledDataset sel_test = select_scenario(test, sc);

      GbdtParams base = config.base_params;
      base.seed = derive_seed(config.master_seed, sc.id, "grid");
      const GridResult gr = grid_search(sel_train, base, config.grid, config.holdout_fraction);

      GbdtParams best = gr.best;
      best.seed = derive_seed(config.master_seed, sc.id, "fit");
      const GbdtModel model = fit(sel_train, best);

      ScenarioResult res;
      res.scenario = sc;
      res.best_params = best;
      res.validation_auc = gr.best_auc;
      res.model_path = config.output_dir / ("model_" + sc.id + ".json");
      save_model(model, res.model_path);

      const std::vector<double> scores = model.predict_score(sel_test);
      res.metrics = bootstrap_evaluate(scores, sel_test.labels, config.costs, config.n_bootstrap,
                                       derive_seed(config.master_seed, sc.id, "bootstrap"));
      res.importance = global_importance(model, sel_test);
      res.importance_by_source = aggregate_importance_by_source(res.importance, sel_test.schema);
      results.push_back(std::move(res));
    } catch (const Error& e) {
      throw Error(e.kind(), "scenario " + sc.id + ": " + e.detail());
    }
  }
  return results;
}

namespace {

std::string mean_std(const MetricStat& s, double scale) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f±%.2f", s.mean * scale, s.std * scale);
  return buf;
}

// Column width as displayed: the two-byte "±" renders one cell wide.
size_t display_width(const std::string& s) {
  size_t pm = 0;
  for (size_t i = 0; i + 1 < s.size(); ++i) {
    if (static_cast<unsigned char>(s[i]) == 0xC2 && static_cast<unsigned char>(s[i + 1]) == 0xB1) {
      ++pm;
    }
  }
  return s.size() - pm;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

nlohmann::ordered_json params_json(const GbdtParams& p) {
  nlohmann::ordered_json j;
  j["n_trees"] = p.n_trees;
  j["learning_rate"] = p.learning_rate;
  j["max_depth"] = p.max_depth;
  j["min_child_weight"] = p.min_child_weight;
  j["l2_reg"] = p.l2_reg;
  j["subsample"] = p.subsample;
  j["n_bins"] = p.n_bins;
  j["pos_weight"] = p.pos_weight;
  j["seed"] = p.seed;
  return j;
}

}  // namespace

void render_report(const std::vector<ScenarioResult>& results, const ExperimentConfig& config) {
  if (results.empty()) throw Error(ErrorKind::argument, "render_report with no results");
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) {
    throw Error(ErrorKind::io,
                "cannot create output directory " + config.output_dir.string() + ": " + ec.message());
  }

  const std::vector<std::string> header = {"Scenario", "AUC",    "F1",
                                           "Precision", "Recall", "FinancialLoss"};
  std::vector<std::vector<std::string>> cells;
  for (const ScenarioResult& r : results) {
    cells.push_back({r.scenario.id, mean_std(r.metrics.auc, 100.0), mean_std(r.metrics.f1, 100.0),
                     mean_std(r.metrics.precision, 100.0), mean_std(r.metrics.recall, 100.0),
                     mean_std(r.metrics.financial_loss, 1.0)});
  }

  {
    const auto path = config.output_dir / "report.csv";
    CsvWriter w(path);
    w.write_row(header);
    for (const auto& row : cells) w.write_row(row);
    w.close();
  }

  {
    const auto path = config.output_dir / "report.txt";
    std::ofstream out = open_out(path);
    std::vector<size_t> width(header.size());
    for (size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& row : cells) {
      for (size_t c = 0; c < row.size(); ++c) {
        width[c] = std::max(width[c], display_width(row[c]));
      }
    }
    auto emit = [&](const std::vector<std::string>& row) {
      for (size_t c = 0; c < row.size(); ++c) {
        out << row[c] << std::string(width[c] - display_width(row[c]), ' ');
        out << (c + 1 == row.size() ? "\n" : "  ");
      }
    };
    emit(header);
    for (size_t c = 0; c < header.size(); ++c) {
      out << std::string(width[c], '-') << (c + 1 == header.size() ? "\n" : "  ");
    }
    for (const auto& row : cells) emit(row);
    finish(out, path);
  }

  {
    const auto path = config.output_dir / "loss_plot.csv";
    CsvWriter w(path);
    w.write_row({"scenario", "financial_loss_mean", "financial_loss_std"});
    for (const ScenarioResult& r : results) {
      w.write_row({r.scenario.id, format_double(r.metrics.financial_loss.mean),
                   format_double(r.metrics.financial_loss.std)});
    }
    w.close();
  }

  for (const ScenarioResult& r : results) {
    if (r.importance.entries.empty()) continue;
    {
      const auto path = config.output_dir / ("importance_" + r.scenario.id + ".csv");
      CsvWriter w(path);
      w.write_row({"rank", "feature", "group", "mean_abs_shap"});
      for (size_t i = 0; i < r.importance.entries.size(); ++i) {
        const ImportanceEntry& e = r.importance.entries[i];
        w.write_row({std::to_string(i + 1), e.feature, to_string(e.group),
                     format_double(e.mean_abs_shap)});
      }
      w.close();
    }
    {
      const auto path = config.output_dir / ("importance_plot_" + r.scenario.id + ".tsv");
      std::ofstream out = open_out(path);
      for (const ImportanceEntry& e : r.importance.entries) {
        out << e.feature << "\t" << format_double(e.mean_abs_shap) << "\n";
      }
      finish(out, path);
    }
    if (!r.importance_by_source.entries.empty()) {
      const auto path = config.output_dir / ("importance_by_source_" + r.scenario.id + ".csv");
      CsvWriter w(path);
      w.write_row({"rank", "feature", "group", "mean_abs_shap"});
      for (size_t i = 0; i < r.importance_by_source.entries.size(); ++i) {
        const ImportanceEntry& e = r.importance_by_source.entries[i];
        w.write_row({std::to_string(i + 1), e.feature, to_string(e.group),
                     format_double(e.mean_abs_shap)});
      }
      w.close();
    }
  }

  {
    nlohmann::ordered_json j;
    j["tool"] = "fraudfuse";
    j["version"] = kVersion;
    j["status"] = "ok";
    j["master_seed"] = config.master_seed;
    if (config.train_size) {
      j["split"]["train_size"] = *config.train_size;
    } else {
      j["split"]["train_fraction"] = config.train_fraction;
    }
    j["holdout_fraction"] = config.holdout_fraction;
    j["n_bootstrap"] = config.n_bootstrap;
    j["costs"]["acl"] = config.costs.acl;
    j["costs"]["clv"] = config.costs.clv;
    j["costs"]["churn_given_reject"] = config.costs.churn_given_reject;
    nlohmann::ordered_json jgrid;
    for (const auto& [name, values] : config.grid.axes) jgrid[name] = values;
    j["grid"] = std::move(jgrid);
    j["base_params"] = params_json(config.base_params);
    j["tuning"] = "per-scenario grid search on a chronological holdout";

    nlohmann::ordered_json jres = nlohmann::ordered_json::array();
    for (const ScenarioResult& r : results) {
      nlohmann::ordered_json js;
      js["scenario"] = r.scenario.id;
      js["model"] = r.model_path.filename().string();
      js["best_params"] = params_json(r.best_params);
      js["validation_auc"] = r.validation_auc;
      js["threshold"] = r.metrics.threshold;
      js["auc_mean"] = r.metrics.auc.mean;
      js["auc_std"] = r.metrics.auc.std;
      js["f1_mean"] = r.metrics.f1.mean;
      js["f1_std"] = r.metrics.f1.std;
      js["precision_mean"] = r.metrics.precision.mean;
      js["precision_std"] = r.metrics.precision.std;
      js["recall_mean"] = r.metrics.recall.mean;
      js["recall_std"] = r.metrics.recall.std;
      js["financial_loss_mean"] = r.metrics.financial_loss.mean;
      js["financial_loss_std"] = r.metrics.financial_loss.std;
      jres.push_back(std::move(js));
    }
    j["scenarios"] = std::move(jres);

    const auto path = config.output_dir / "manifest.json";
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
    finish(out, path);
  }
}

}  // namespace fraudfuse
