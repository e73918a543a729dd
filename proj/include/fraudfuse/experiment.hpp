#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "fraudfuse/dataset.hpp"
#include "fraudfuse/explain.hpp"
#include "fraudfuse/gbdt.hpp"
#include "fraudfuse/metrics.hpp"

namespace fraudfuse {

struct ExperimentConfig {
  std::vector<Scenario> scenarios = Scenario::all_six();
  double train_fraction = 0.6;
  std::optional<size_t> train_size;  // wins over train_fraction when set
  GbdtParams base_params;
  GridSpec grid;  // see default_grid()
  double holdout_fraction = 0.2;
  CostParams costs;
  size_t n_bootstrap = 100;
  uint64_t master_seed = 0;
  std::filesystem::path output_dir;

  void validate() const;  // ErrorKind::config on violation
};

// learning_rate {0.05, 0.1, 0.3} x max_depth {3, 5, 7} x n_trees {100, 300}
// x min_child_weight {1, 10}.
GridSpec default_grid();

struct ScenarioResult {
  Scenario scenario;
  GbdtParams best_params;
  double validation_auc = 0.0;
  MetricSummary metrics;
  GlobalImportance importance;            // per encoded column
  GlobalImportance importance_by_source;  // summed back onto raw columns
  std::filesystem::path model_path;
};

// Splits once (shared across scenarios), then per scenario: select columns,
// grid-search, fit, score the test rows, bootstrap the metrics, rank feature
// importance on the test set. Models are persisted under config.output_dir.
// Stage seeds are derived from (master_seed, scenario id, stage name), so
// adding or removing other scenarios does not move a scenario's results.
std::vector<ScenarioResult> run_experiment(const LabeledDataset& dataset,
                                           const ExperimentConfig& config);

// Writes into config.output_dir: report.csv and report.txt (per-scenario
// mean±std table), loss_plot.csv, importance_<scenario>.csv plus
// importance_plot_<scenario>.tsv and importance_by_source_<scenario>.csv
// (skipped when importance is empty), and manifest.json. Output bytes depend
// only on results and config.
void render_report(const std::vector<ScenarioResult>& results, const ExperimentConfig& config);

}  // namespace fraudfuse
