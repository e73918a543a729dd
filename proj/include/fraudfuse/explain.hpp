#pragma once

#include <string>
#include <vector>

#include "fraudfuse/dataset.hpp"
#include "fraudfuse/gbdt.hpp"

namespace fraudfuse {

// Additive attribution of one prediction, in margin (log-odds) units:
// base_value + sum(phi) == prediction_margin.
struct ShapExplanation {
  std::vector<double> phi;  // one entry per model feature
  double base_value = 0.0;
  double prediction_margin = 0.0;
};

struct ImportanceEntry {
  std::string feature;
  FeatureGroup group = FeatureGroup::super_app;
  double mean_abs_shap = 0.0;
};

struct GlobalImportance {
  std::vector<ImportanceEntry> entries;  // sorted descending by mean_abs_shap
};

// Exact Shapley values under the path-conditional expectation defined by the
// trees' training covers, summed over trees. Polynomial-time recursion over
// each tree's paths. ErrorKind::model_integrity on a zero-cover internal node.
ShapExplanation tree_shap(const GbdtModel& model, const double* row);

// Same attribution by explicit enumeration of all 2^d feature subsets with
// Shapley weights |S|! (d-|S|-1)! / d!. Oracle only; d <= 12.
ShapExplanation brute_force_shap(const GbdtModel& model, const double* row);

// mean_abs_shap[f] = (1/N) sum over rows |phi_row[f]|, tagged with each
// feature's group from the dataset schema and sorted descending (stable).
GlobalImportance global_importance(const GbdtModel& model, const LabeledDataset& ds);

// Sums importance over encoded columns sharing a source column, reporting
// raw-feature importance (one-hot indicators collapse into their parent).
GlobalImportance aggregate_importance_by_source(const GlobalImportance& imp,
                                                const FeatureSchema& schema);

}  // namespace fraudfuse
