#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fraudfuse/dataset.hpp"

namespace fraudfuse {

struct GbdtParams {
  size_t n_trees = 100;
  double learning_rate = 0.1;
  size_t max_depth = 5;
  double min_child_weight = 1.0;  // minimum hessian mass per child
  double l2_reg = 1.0;
  double subsample = 1.0;         // per-tree row sampling rate
  size_t n_bins = 256;            // histogram resolution
  double pos_weight = 1.0;        // optional positive-class weight; 1 = off
  uint64_t seed = 0;

  void validate() const;          // ErrorKind::config on violation
  std::string describe() const;   // "n_trees=100 learning_rate=0.1 ..."
};

// Node of a regression tree. feature < 0 marks a leaf. Rule at internal
// nodes: x[feature] < threshold goes left, missing follows default_left.
struct TreeNode {
  int32_t feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  int32_t left = -1;
  int32_t right = -1;
  double weight = 0.0;  // leaf margin contribution, learning rate baked in
  double cover = 0.0;   // training hessian mass reaching the node

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  // Leaf weight reached by a dense feature row (NaN = missing).
  double leaf_value(const double* row) const;
};

struct GbdtModel {
  double base_margin = 0.0;
  GbdtParams params;
  uint64_t schema_fp = 0;                  // fingerprint of the training schema
  std::vector<std::string> feature_names;  // encoded column names, model order
  std::vector<Tree> trees;

  size_t n_features() const { return feature_names.size(); }

  double predict_margin_row(const double* row) const;
  // Margin / sigmoid(margin) per dataset row; ErrorKind::schema when the
  // dataset's schema fingerprint differs from the training one.
  std::vector<double> predict_margin(const LabeledDataset& ds) const;
  std::vector<double> predict_score(const LabeledDataset& ds) const;
};

// Second-order boosting on logistic loss over histogram-binned features.
// Missing values follow the per-split direction with the higher gain.
// Deterministic for fixed params regardless of worker-thread count.
// train_loss, if given, receives the mean training logistic loss before
// boosting and after every round (n_trees + 1 entries).
GbdtModel fit(const LabeledDataset& train, const GbdtParams& params,
              std::vector<double>* train_loss = nullptr);

// Hyperparameter grid: axes in declared order; the cartesian product is
// enumerated with the first axis varying slowest, and validation-AUC ties
// keep the earlier point. Axis names: learning_rate, max_depth, n_trees,
// min_child_weight, l2_reg, subsample, n_bins.
struct GridSpec {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
};

struct GridResult {
  GbdtParams best;
  double best_auc = 0.0;
  std::vector<std::pair<GbdtParams, double>> table;  // grid order
};

// Chronological holdout: fit each point on the first rows, score validation
// AUC on the last floor(holdout_fraction * n) rows.
GridResult grid_search(const LabeledDataset& train, const GbdtParams& base,
                       const GridSpec& grid, double holdout_fraction);

nlohmann::ordered_json model_to_json(const GbdtModel& model);
GbdtModel model_from_json(const nlohmann::json& j);

void save_model(const GbdtModel& model, const std::filesystem::path& path);
GbdtModel load_model(const std::filesystem::path& path);

}  // namespace fraudfuse
