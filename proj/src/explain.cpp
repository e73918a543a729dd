#include "fraudfuse/explain.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fraudfuse/errors.hpp"
#include "fraudfuse/kernels.hpp"
#include "fraudfuse/threading.hpp"

namespace fraudfuse {

namespace {

// One step of the feature path walked from the root: fractions of background
// (zero) and foreground (one) mass that flow past this feature's splits, and
// the permutation weight accumulated for each subset size.
struct PathElement {
  int feature_index = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* unique_path, unsigned unique_depth, double zero_fraction,
                 double one_fraction, int feature_index) {
  unique_path[unique_depth].feature_index = feature_index;
  unique_path[unique_depth].zero_fraction = zero_fraction;
  unique_path[unique_depth].one_fraction = one_fraction;
  unique_path[unique_depth].pweight = unique_depth == 0 ? 1.0 : 0.0;
  for (int i = static_cast<int>(unique_depth) - 1; i >= 0; --i) {
    unique_path[i + 1].pweight +=
        one_fraction * unique_path[i].pweight * (i + 1) / static_cast<double>(unique_depth + 1);
    unique_path[i].pweight = zero_fraction * unique_path[i].pweight *
                             (unique_depth - static_cast<unsigned>(i)) /
                             static_cast<double>(unique_depth + 1);
  }
}

void unwind_path(PathElement* unique_path, unsigned unique_depth, unsigned path_index) {
  const double one_fraction = unique_path[path_index].one_fraction;
  const double zero_fraction = unique_path[path_index].zero_fraction;
  double next_one_portion = unique_path[unique_depth].pweight;

  for (int i = static_cast<int>(unique_depth) - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = unique_path[i].pweight;
      unique_path[i].pweight =
          next_one_portion * (unique_depth + 1) / static_cast<double>((i + 1) * one_fraction);
      next_one_portion = tmp - unique_path[i].pweight * zero_fraction *
                                   (unique_depth - static_cast<unsigned>(i)) /
                                   static_cast<double>(unique_depth + 1);
    } else {
      unique_path[i].pweight =
          (unique_path[i].pweight * (unique_depth + 1)) /
          (zero_fraction * (unique_depth - static_cast<unsigned>(i)));
    }
  }

  for (unsigned i = path_index; i < unique_depth; ++i) {
    unique_path[i].feature_index = unique_path[i + 1].feature_index;
    unique_path[i].zero_fraction = unique_path[i + 1].zero_fraction;
    unique_path[i].one_fraction = unique_path[i + 1].one_fraction;
  }
}

// Total permutation weight if the element at path_index were unwound.
double unwound_path_sum(const PathElement* unique_path, unsigned unique_depth,
                        unsigned path_index) {
  const double one_fraction = unique_path[path_index].one_fraction;
  const double zero_fraction = unique_path[path_index].zero_fraction;
  double next_one_portion = unique_path[unique_depth].pweight;
  double total = 0.0;
  for (int i = static_cast<int>(unique_depth) - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp =
          next_one_portion * (unique_depth + 1) / static_cast<double>((i + 1) * one_fraction);
      total += tmp;
      next_one_portion =
          unique_path[i].pweight -
          tmp * zero_fraction *
              ((unique_depth - static_cast<unsigned>(i)) / static_cast<double>(unique_depth + 1));
    } else {
      total += (unique_path[i].pweight / zero_fraction) /
               ((unique_depth - static_cast<unsigned>(i)) / static_cast<double>(unique_depth + 1));
    }
  }
  return total;
}

void require_cover(const TreeNode& nd) {
  if (!(nd.cover > 0.0)) {
    throw Error(ErrorKind::model_integrity, "zero-cover internal node");
  }
}

void shap_recurse(const Tree& tree, const double* row, std::vector<double>& phi,
                  int32_t node_index, unsigned unique_depth, PathElement* parent_unique_path,
                  double parent_zero_fraction, double parent_one_fraction,
                  int parent_feature_index) {
  PathElement* unique_path = parent_unique_path + unique_depth + 1;
  std::copy(parent_unique_path, parent_unique_path + unique_depth + 1, unique_path);
  extend_path(unique_path, unique_depth, parent_zero_fraction, parent_one_fraction,
              parent_feature_index);

  const TreeNode& nd = tree.nodes[node_index];
  if (nd.is_leaf()) {
    for (unsigned i = 1; i <= unique_depth; ++i) {
      const double w = unwound_path_sum(unique_path, unique_depth, i);
      const PathElement& el = unique_path[i];
      phi[el.feature_index] += w * (el.one_fraction - el.zero_fraction) * nd.weight;
    }
    return;
  }

  require_cover(nd);
  const double x = row[nd.feature];
  const bool go_left = std::isnan(x) ? nd.default_left : x < nd.threshold;
  const int32_t hot = go_left ? nd.left : nd.right;
  const int32_t cold = go_left ? nd.right : nd.left;
  const double hot_zero_fraction = tree.nodes[hot].cover / nd.cover;
  const double cold_zero_fraction = tree.nodes[cold].cover / nd.cover;
  double incoming_zero_fraction = 1.0;
  double incoming_one_fraction = 1.0;

  // Undo an earlier split on this feature so the path holds each feature once.
  unsigned path_index = 0;
  for (; path_index <= unique_depth; ++path_index) {
    if (unique_path[path_index].feature_index == nd.feature) break;
  }
  if (path_index != unique_depth + 1) {
    incoming_zero_fraction = unique_path[path_index].zero_fraction;
    incoming_one_fraction = unique_path[path_index].one_fraction;
    unwind_path(unique_path, unique_depth, path_index);
    unique_depth -= 1;
  }

  shap_recurse(tree, row, phi, hot, unique_depth + 1, unique_path,
               hot_zero_fraction * incoming_zero_fraction, incoming_one_fraction, nd.feature);
  shap_recurse(tree, row, phi, cold, unique_depth + 1, unique_path,
               cold_zero_fraction * incoming_zero_fraction, 0.0, nd.feature);
}

unsigned tree_max_depth(const Tree& tree) {
  unsigned deepest = 0;
  std::vector<std::pair<int32_t, unsigned>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [id, depth] = stack.back();
    stack.pop_back();
    const TreeNode& nd = tree.nodes[id];
    if (nd.is_leaf()) {
      deepest = std::max(deepest, depth);
    } else {
      stack.emplace_back(nd.left, depth + 1);
      stack.emplace_back(nd.right, depth + 1);
    }
  }
  return deepest;
}

double tree_expected_value(const Tree& tree, int32_t id) {
  const TreeNode& nd = tree.nodes[id];
  if (nd.is_leaf()) return nd.weight;
  require_cover(nd);
  return (tree_expected_value(tree, nd.left) * tree.nodes[nd.left].cover +
          tree_expected_value(tree, nd.right) * tree.nodes[nd.right].cover) /
         nd.cover;
}

}  // namespace

ShapExplanation tree_shap(const GbdtModel& model, const double* row) {
  ShapExplanation ex;
  ex.phi.assign(model.n_features(), 0.0);
  ex.base_value = model.base_margin;
  for (const Tree& tree : model.trees) {
    ex.base_value += tree_expected_value(tree, 0);
    const unsigned d = tree_max_depth(tree);
    std::vector<PathElement> storage(((d + 3) * (d + 4)) / 2);
    shap_recurse(tree, row, ex.phi, 0, 0, storage.data(), 1.0, 1.0, -1);
  }
  ex.prediction_margin = model.predict_margin_row(row);
  return ex;
}

namespace {
double conditional_expectation(const Tree& tree, int32_t id, uint32_t mask, const double* row) {
  const TreeNode& nd = tree.nodes[id];
  if (nd.is_leaf()) return nd.weight;
  if (mask & (1u << nd.feature)) {
    const double x = row[nd.feature];
    const bool go_left = std::isnan(x) ? nd.default_left : x < nd.threshold;
    return conditional_expectation(tree, go_left ? nd.left : nd.right, mask, row);
  }
  require_cover(nd);
  return (conditional_expectation(tree, nd.left, mask, row) * tree.nodes[nd.left].cover +
          conditional_expectation(tree, nd.right, mask, row) * tree.nodes[nd.right].cover) /
         nd.cover;
}
}  // namespace

ShapExplanation brute_force_shap(const GbdtModel& model, const double* row) {
  const size_t d = model.n_features();
  if (d > 12) {
    throw Error(ErrorKind::argument,
                "brute_force_shap enumerates 2^d subsets; refusing d = " + std::to_string(d));
  }

  const uint32_t n_masks = 1u << d;
  std::vector<double> v(n_masks, model.base_margin);
  for (const Tree& tree : model.trees) {
    for (uint32_t mask = 0; mask < n_masks; ++mask) {
      v[mask] += conditional_expectation(tree, 0, mask, row);
    }
  }

  std::vector<double> factorial(d + 1, 1.0);
  for (size_t k = 1; k <= d; ++k) factorial[k] = factorial[k - 1] * static_cast<double>(k);

  ShapExplanation ex;
  ex.phi.assign(d, 0.0);
  for (size_t i = 0; i < d; ++i) {
    const uint32_t bit = 1u << i;
    for (uint32_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const auto s = static_cast<size_t>(__builtin_popcount(mask));
      const double w = factorial[s] * factorial[d - s - 1] / factorial[d];
      ex.phi[i] += w * (v[mask | bit] - v[mask]);
    }
  }
  ex.base_value = v[0];
  ex.prediction_margin = model.predict_margin_row(row);
  return ex;
}

GlobalImportance global_importance(const GbdtModel& model, const LabeledDataset& ds) {
  if (ds.n_rows() == 0) throw Error(ErrorKind::argument, "global_importance on an empty dataset");
  const uint64_t fp = schema_fingerprint(ds.schema);
  if (fp != model.schema_fp) {
    throw Error(ErrorKind::schema, "schema fingerprint mismatch: model " +
                                       fingerprint_hex(model.schema_fp) + ", data " +
                                       fingerprint_hex(fp));
  }

  const size_t n = ds.n_rows();
  const size_t n_feat = model.n_features();
  constexpr size_t kBlock = 256;
  const size_t n_blocks = (n + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> partial(n_blocks);
  parallel_for_blocked(n, kBlock, [&](size_t block, size_t begin, size_t end) {
    std::vector<double> acc(n_feat, 0.0);
    std::vector<double> row(ds.n_cols());
    for (size_t i = begin; i < end; ++i) {
      ds.copy_row(i, row.data());
      const ShapExplanation ex = tree_shap(model, row.data());
      kernels::accumulate_abs(acc.data(), ex.phi.data(), n_feat);
    }
    partial[block] = std::move(acc);
  });

  std::vector<double> total(n_feat, 0.0);
  for (const auto& acc : partial) {
    for (size_t f = 0; f < n_feat; ++f) total[f] += acc[f];
  }

  GlobalImportance imp;
  for (size_t f = 0; f < n_feat; ++f) {
    imp.entries.push_back(ImportanceEntry{model.feature_names[f], ds.schema.columns[f].group,
                                          total[f] / static_cast<double>(n)});
  }
  std::stable_sort(imp.entries.begin(), imp.entries.end(),
                   [](const ImportanceEntry& a, const ImportanceEntry& b) {
                     return a.mean_abs_shap > b.mean_abs_shap;
                   });
  return imp;
}

GlobalImportance aggregate_importance_by_source(const GlobalImportance& imp,
                                                const FeatureSchema& schema) {
  GlobalImportance out;
  std::map<std::string, size_t> slot;
  for (const ImportanceEntry& e : imp.entries) {
    const size_t c = schema.column_index(e.feature);
    std::string source = e.feature;
    if (c != FeatureSchema::npos && !schema.columns[c].source.empty()) {
      source = schema.columns[c].source;
    }
    auto [it, fresh] = slot.emplace(source, out.entries.size());
    if (fresh) {
      out.entries.push_back(ImportanceEntry{source, e.group, e.mean_abs_shap});
    } else {
      out.entries[it->second].mean_abs_shap += e.mean_abs_shap;
    }
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const ImportanceEntry& a, const ImportanceEntry& b) {
                     return a.mean_abs_shap > b.mean_abs_shap;
                   });
  return out;
}

}  // namespace fraudfuse
