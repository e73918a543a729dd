#include "fraudfuse/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "fraudfuse/csv.hpp"
#include "fraudfuse/errors.hpp"
#include "fraudfuse/kernels.hpp"
#include "fraudfuse/metrics.hpp"
#include "fraudfuse/rng.hpp"
#include "fraudfuse/threading.hpp"

namespace fraudfuse {

void GbdtParams::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::config, "learning_rate must be > 0");
  if (max_depth == 0) throw Error(ErrorKind::config, "max_depth must be >= 1");
  if (!(min_child_weight >= 0.0)) throw Error(ErrorKind::config, "min_child_weight must be >= 0");
  if (!(l2_reg >= 0.0)) throw Error(ErrorKind::config, "l2_reg must be >= 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) {
    throw Error(ErrorKind::config, "subsample must be in (0,1]");
  }
  if (n_bins < 2 || n_bins > 65534) throw Error(ErrorKind::config, "n_bins must be in [2, 65534]");
  if (!(pos_weight > 0.0)) throw Error(ErrorKind::config, "pos_weight must be > 0");
}

std::string GbdtParams::describe() const {
  return "n_trees=" + std::to_string(n_trees) + " learning_rate=" + format_double(learning_rate) +
         " max_depth=" + std::to_string(max_depth) +
         " min_child_weight=" + format_double(min_child_weight) + " l2_reg=" + format_double(l2_reg) +
         " subsample=" + format_double(subsample) + " n_bins=" + std::to_string(n_bins);
}

double Tree::leaf_value(const double* row) const {
  int32_t id = 0;
  while (!nodes[id].is_leaf()) {
    const TreeNode& nd = nodes[id];
    const double x = row[nd.feature];
    if (std::isnan(x)) {
      id = nd.default_left ? nd.left : nd.right;
    } else {
      id = x < nd.threshold ? nd.left : nd.right;
    }
  }
  return nodes[id].weight;
}

double GbdtModel::predict_margin_row(const double* row) const {
  double margin = base_margin;
  for (const Tree& tree : trees) margin += tree.leaf_value(row);
  return margin;
}

std::vector<double> GbdtModel::predict_margin(const LabeledDataset& ds) const {
  const uint64_t fp = schema_fingerprint(ds.schema);
  if (fp != schema_fp) {
    throw Error(ErrorKind::schema, "schema fingerprint mismatch: model " +
                                       fingerprint_hex(schema_fp) + ", data " + fingerprint_hex(fp));
  }
  const size_t n = ds.n_rows();
  std::vector<double> margins(n);
  parallel_for_blocked(n, 1024, [&](size_t, size_t begin, size_t end) {
    std::vector<double> row(ds.n_cols());
    for (size_t i = begin; i < end; ++i) {
      ds.copy_row(i, row.data());
      margins[i] = predict_margin_row(row.data());
    }
  });
  return margins;
}

std::vector<double> GbdtModel::predict_score(const LabeledDataset& ds) const {
  std::vector<double> out = predict_margin(ds);
  kernels::sigmoid(out.data(), out.data(), out.size());
  return out;
}

namespace {

// Histogram codes for one feature. code(x) = #{cuts <= x}; splitting at cut
// index t sends code <= t left, which is exactly x < cuts[t]. Missing values
// get their own trailing code.
struct BinnedFeature {
  std::vector<double> cuts;      // strictly ascending
  std::vector<uint16_t> codes;   // one per training row

  uint16_t missing_code() const { return static_cast<uint16_t>(cuts.size() + 1); }
  size_t n_slots() const { return cuts.size() + 2; }
};

BinnedFeature bin_feature(const std::vector<double>& col, size_t n_bins) {
  BinnedFeature bf;
  std::vector<double> vals;
  vals.reserve(col.size());
  for (double v : col) {
    if (!std::isnan(v)) vals.push_back(v);
  }
  std::sort(vals.begin(), vals.end());

  // Cut in (lo, hi] so that lo lands left of it and hi right.
  auto push_cut = [&bf](double lo, double hi) {
    double cut = lo + (hi - lo) * 0.5;
    if (!(cut > lo)) cut = hi;
    if (cut > hi) cut = hi;
    bf.cuts.push_back(cut);
  };

  std::vector<double> distinct;
  for (double v : vals) {
    if (distinct.empty() || distinct.back() < v) distinct.push_back(v);
  }
  if (distinct.size() > 1) {
    if (distinct.size() <= n_bins) {
      for (size_t i = 1; i < distinct.size(); ++i) push_cut(distinct[i - 1], distinct[i]);
    } else {
      for (size_t k = 1; k < n_bins; ++k) {
        const size_t pos = k * vals.size() / n_bins;
        if (pos > 0 && vals[pos - 1] < vals[pos]) push_cut(vals[pos - 1], vals[pos]);
      }
    }
  }

  bf.codes.resize(col.size());
  for (size_t i = 0; i < col.size(); ++i) {
    if (std::isnan(col[i])) {
      bf.codes[i] = bf.missing_code();
    } else {
      bf.codes[i] =
          static_cast<uint16_t>(std::upper_bound(bf.cuts.begin(), bf.cuts.end(), col[i]) -
                                bf.cuts.begin());
    }
  }
  return bf;
}

struct SplitChoice {
  double gain = 0.0;
  int32_t feature = -1;
  int32_t cut_index = -1;
  bool default_left = false;

  bool valid() const { return feature >= 0; }
};

struct NodeBuild {
  int32_t node_id = 0;
  size_t depth = 0;
  std::vector<int32_t> rows;
  double sum_g = 0.0;
  double sum_h = 0.0;
  std::vector<std::vector<kernels::HistBin>> hist;  // one histogram per feature
};

// Ignore split gains below this: histogram subtraction leaves fp residue in
// bins that should be exactly empty.
constexpr double kMinSplitGain = 1e-10;

double gain_term(double g, double h, double lambda) { return g * g / (h + lambda); }

SplitChoice best_split(const std::vector<BinnedFeature>& binned, const NodeBuild& nb,
                       const GbdtParams& p) {
  SplitChoice best;
  const double parent = gain_term(nb.sum_g, nb.sum_h, p.l2_reg);
  const uint64_t n_node = nb.rows.size();

  auto consider = [&](int32_t f, int32_t t, bool default_left, double gl, double hl, uint64_t cl,
                      double gr, double hr, uint64_t cr) {
    if (cl == 0 || cr == 0) return;
    if (hl < p.min_child_weight || hr < p.min_child_weight) return;
    const double gain = 0.5 * (gain_term(gl, hl, p.l2_reg) + gain_term(gr, hr, p.l2_reg) - parent);
    if (gain > kMinSplitGain && gain > best.gain) {
      best = SplitChoice{gain, f, t, default_left};
    }
  };

  for (size_t f = 0; f < binned.size(); ++f) {
    const auto& hist = nb.hist[f];
    const size_t m = binned[f].cuts.size();
    if (m == 0) continue;
    const kernels::HistBin& miss = hist[m + 1];
    double gl = 0.0, hl = 0.0;
    uint64_t cl = 0;
    for (size_t t = 0; t < m; ++t) {
      gl += hist[t].sum_g;
      hl += hist[t].sum_h;
      cl += hist[t].count;
      // Missing rows right, then missing rows left; ties keep the first.
      consider(static_cast<int32_t>(f), static_cast<int32_t>(t), false, gl, hl, cl,
               nb.sum_g - gl, nb.sum_h - hl, n_node - cl);
      consider(static_cast<int32_t>(f), static_cast<int32_t>(t), true, gl + miss.sum_g,
               hl + miss.sum_h, cl + miss.count, nb.sum_g - gl - miss.sum_g,
               nb.sum_h - hl - miss.sum_h, n_node - cl - miss.count);
    }
  }
  return best;
}

// split_bin[node] = chosen cut index (training-time routing), -1 at leaves.
Tree build_tree(const std::vector<BinnedFeature>& binned, const double* g, const double* h,
                std::vector<int32_t> root_rows, const GbdtParams& p,
                std::vector<int32_t>& split_bin) {
  Tree tree;
  split_bin.clear();

  auto build_hist = [&](const std::vector<int32_t>& rows) {
    std::vector<std::vector<kernels::HistBin>> hist(binned.size());
    parallel_for(binned.size(), [&](size_t f) {
      hist[f].assign(binned[f].n_slots(), kernels::HistBin{});
      kernels::hist_accumulate(binned[f].codes.data(), rows.data(), rows.size(), g, h,
                               hist[f].data());
    });
    return hist;
  };

  NodeBuild root;
  root.rows = std::move(root_rows);
  for (int32_t r : root.rows) {
    root.sum_g += g[r];
    root.sum_h += h[r];
  }
  root.hist = build_hist(root.rows);
  tree.nodes.emplace_back();
  split_bin.push_back(-1);

  std::vector<NodeBuild> level;
  level.push_back(std::move(root));

  while (!level.empty()) {
    std::vector<NodeBuild> next;
    for (NodeBuild& nb : level) {
      tree.nodes[nb.node_id].cover = nb.sum_h;

      SplitChoice sc;
      if (nb.depth < p.max_depth && nb.rows.size() >= 2) sc = best_split(binned, nb, p);
      if (!sc.valid()) {
        TreeNode& nd = tree.nodes[nb.node_id];
        nd.feature = -1;
        nd.weight = -p.learning_rate * nb.sum_g / (nb.sum_h + p.l2_reg);
        continue;
      }

      const BinnedFeature& bf = binned[sc.feature];
      const uint16_t miss_code = bf.missing_code();
      NodeBuild lc, rc;
      lc.depth = rc.depth = nb.depth + 1;
      for (int32_t r : nb.rows) {
        const uint16_t code = bf.codes[r];
        const bool left =
            code == miss_code ? sc.default_left : code <= static_cast<uint16_t>(sc.cut_index);
        NodeBuild& child = left ? lc : rc;
        child.rows.push_back(r);
        child.sum_g += g[r];
        child.sum_h += h[r];
      }

      const auto left_id = static_cast<int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      split_bin.push_back(-1);
      split_bin.push_back(-1);
      lc.node_id = left_id;
      rc.node_id = left_id + 1;
      {
        TreeNode& nd = tree.nodes[nb.node_id];
        nd.feature = sc.feature;
        nd.threshold = bf.cuts[sc.cut_index];
        nd.default_left = sc.default_left;
        nd.left = left_id;
        nd.right = left_id + 1;
      }
      split_bin[nb.node_id] = sc.cut_index;

      // Build the smaller child's histograms; the sibling is the parent's
      // minus the smaller's, reusing the parent's storage.
      NodeBuild& small = lc.rows.size() <= rc.rows.size() ? lc : rc;
      NodeBuild& large = lc.rows.size() <= rc.rows.size() ? rc : lc;
      small.hist = build_hist(small.rows);
      large.hist.resize(binned.size());
      parallel_for(binned.size(), [&](size_t f) {
        large.hist[f] = std::move(nb.hist[f]);
        const auto& sm = small.hist[f];
        auto& lg = large.hist[f];
        for (size_t b = 0; b < lg.size(); ++b) {
          lg[b].sum_g -= sm[b].sum_g;
          lg[b].sum_h -= sm[b].sum_h;
          lg[b].count -= sm[b].count;
        }
      });
      nb.hist.clear();
      nb.rows.clear();
      nb.rows.shrink_to_fit();

      next.push_back(std::move(lc));
      next.push_back(std::move(rc));
    }
    level = std::move(next);
  }
  return tree;
}

// Adds the new tree's leaf weights to every training row's margin, routing
// by histogram code so training-time and predict-time paths agree exactly.
void apply_tree(const Tree& tree, const std::vector<int32_t>& split_bin,
                const std::vector<BinnedFeature>& binned, std::vector<double>& margins) {
  parallel_for_blocked(margins.size(), 4096, [&](size_t, size_t begin, size_t end) {
    for (size_t r = begin; r < end; ++r) {
      int32_t id = 0;
      while (!tree.nodes[id].is_leaf()) {
        const TreeNode& nd = tree.nodes[id];
        const BinnedFeature& bf = binned[nd.feature];
        const uint16_t code = bf.codes[r];
        const bool left = code == bf.missing_code()
                              ? nd.default_left
                              : code <= static_cast<uint16_t>(split_bin[id]);
        id = left ? nd.left : nd.right;
      }
      margins[r] += tree.nodes[id].weight;
    }
  });
}

double mean_logistic_loss(const std::vector<double>& margins, const std::vector<uint8_t>& y,
                          double pos_weight) {
  double total = 0.0, weight = 0.0;
  for (size_t i = 0; i < margins.size(); ++i) {
    const double m = margins[i];
    const double w = y[i] ? pos_weight : 1.0;
    // log(1 + e^m) - y*m, overflow-safe
    total += w * (std::max(m, 0.0) - (y[i] ? m : 0.0) + std::log1p(std::exp(-std::abs(m))));
    weight += w;
  }
  return total / weight;
}

}  // namespace

GbdtModel fit(const LabeledDataset& train, const GbdtParams& params,
              std::vector<double>* train_loss) {
  params.validate();
  if (train.n_cols() == 0) throw Error(ErrorKind::config, "empty feature set");
  for (const auto& c : train.schema.columns) {
    if (c.kind != ColumnKind::numeric) {
      throw Error(ErrorKind::argument, "fit requires an encoded (all-numeric) dataset");
    }
  }
  const size_t n = train.n_rows();
  if (n == 0) throw Error(ErrorKind::training, "empty training set");
  if (n > static_cast<size_t>(std::numeric_limits<int32_t>::max())) {
    throw Error(ErrorKind::argument, "training set too large for 32-bit row ids");
  }
  const size_t n_pos = train.fraud_count();
  if (n_pos == 0 || n_pos == n) {
    throw Error(ErrorKind::training, "training data contains a single class");
  }

  GbdtModel model;
  model.params = params;
  model.schema_fp = schema_fingerprint(train.schema);
  for (const auto& c : train.schema.columns) model.feature_names.push_back(c.name);
  const double p = static_cast<double>(n_pos) / static_cast<double>(n);
  model.base_margin = std::log(p / (1.0 - p));

  std::vector<BinnedFeature> binned(train.n_cols());
  parallel_for(train.n_cols(),
               [&](size_t f) { binned[f] = bin_feature(train.numeric_cols[f], params.n_bins); });

  std::vector<double> margins(n, model.base_margin);
  std::vector<double> g(n), h(n);
  if (train_loss) {
    train_loss->clear();
    train_loss->push_back(mean_logistic_loss(margins, train.labels, params.pos_weight));
  }

  std::vector<int32_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);

  for (size_t t = 0; t < params.n_trees; ++t) {
    kernels::logistic_grad_hess(margins.data(), train.labels.data(), params.pos_weight, g.data(),
                                h.data(), n);
    std::vector<int32_t> rows;
    if (params.subsample >= 1.0) {
      rows = all_rows;
    } else {
      Rng rng(derive_seed(params.seed, "subsample", t));
      rows.reserve(static_cast<size_t>(static_cast<double>(n) * params.subsample) + 16);
      for (size_t i = 0; i < n; ++i) {
        if (rng.bernoulli(params.subsample)) rows.push_back(static_cast<int32_t>(i));
      }
    }

    std::vector<int32_t> split_bin;
    Tree tree = build_tree(binned, g.data(), h.data(), std::move(rows), params, split_bin);
    apply_tree(tree, split_bin, binned, margins);
    model.trees.push_back(std::move(tree));
    if (train_loss) {
      train_loss->push_back(mean_logistic_loss(margins, train.labels, params.pos_weight));
    }
  }
  return model;
}

namespace {
void apply_grid_axis(GbdtParams& p, const std::string& name, double v) {
  auto as_count = [&](const char* what) {
    if (v < 0.0 || v != std::floor(v)) {
      throw Error(ErrorKind::config,
                  std::string("grid axis ") + what + " needs a non-negative integer, got " +
                      format_double(v));
    }
    return static_cast<size_t>(v);
  };
  if (name == "learning_rate") {
    p.learning_rate = v;
  } else if (name == "max_depth") {
    p.max_depth = as_count("max_depth");
  } else if (name == "n_trees") {
    p.n_trees = as_count("n_trees");
  } else if (name == "min_child_weight") {
    p.min_child_weight = v;
  } else if (name == "l2_reg") {
    p.l2_reg = v;
  } else if (name == "subsample") {
    p.subsample = v;
  } else if (name == "n_bins") {
    p.n_bins = as_count("n_bins");
  } else {
    throw Error(ErrorKind::config, "unknown grid axis '" + name + "'");
  }
}
}  // namespace

GridResult grid_search(const LabeledDataset& train, const GbdtParams& base, const GridSpec& grid,
                       double holdout_fraction) {
  if (grid.axes.empty()) throw Error(ErrorKind::config, "hyperparameter grid is empty");
  for (const auto& [name, values] : grid.axes) {
    if (values.empty()) throw Error(ErrorKind::config, "grid axis '" + name + "' has no values");
  }
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw Error(ErrorKind::argument, "holdout_fraction must be in (0,1)");
  }
  const size_t n_val =
      static_cast<size_t>(std::floor(holdout_fraction * static_cast<double>(train.n_rows())));
  if (n_val == 0 || n_val >= train.n_rows()) {
    throw Error(ErrorKind::argument, "holdout window is empty or covers the whole training set");
  }
  auto [fit_part, val_part] = time_split_at(train, train.n_rows() - n_val);

  GridResult res;
  double best_auc = -1.0;
  std::vector<size_t> idx(grid.axes.size(), 0);
  while (true) {
    GbdtParams point = base;
    for (size_t a = 0; a < grid.axes.size(); ++a) {
      apply_grid_axis(point, grid.axes[a].first, grid.axes[a].second[idx[a]]);
    }
    try {
      point.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::config, "grid point (" + point.describe() + "): " + e.detail());
    }

    const GbdtModel m = fit(fit_part, point);
    const std::vector<double> scores = m.predict_score(val_part);
    double auc = 0.0;
    try {
      auc = roc_auc(scores, val_part.labels);
    } catch (const Error& e) {
      throw Error(ErrorKind::training, "grid search holdout: " + e.detail());
    }
    res.table.emplace_back(point, auc);
    if (auc > best_auc) {
      best_auc = auc;
      res.best = point;
      res.best_auc = auc;
    }

    // Odometer over the axes, last axis fastest.
    size_t a = grid.axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < grid.axes[a].second.size()) break;
      idx[a] = 0;
      if (a == 0) return res;
    }
  }
}

nlohmann::ordered_json model_to_json(const GbdtModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "fraudfuse-gbdt";
  j["version"] = 1;
  j["base_margin"] = model.base_margin;
  j["schema_fingerprint"] = fingerprint_hex(model.schema_fp);

  nlohmann::ordered_json jp;
  jp["n_trees"] = model.params.n_trees;
  jp["learning_rate"] = model.params.learning_rate;
  jp["max_depth"] = model.params.max_depth;
  jp["min_child_weight"] = model.params.min_child_weight;
  jp["l2_reg"] = model.params.l2_reg;
  jp["subsample"] = model.params.subsample;
  jp["n_bins"] = model.params.n_bins;
  jp["pos_weight"] = model.params.pos_weight;
  jp["seed"] = model.params.seed;
  j["params"] = std::move(jp);

  j["feature_names"] = model.feature_names;

  nlohmann::ordered_json trees = nlohmann::ordered_json::array();
  for (const Tree& tree : model.trees) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const TreeNode& nd : tree.nodes) {
      nlohmann::ordered_json jn;
      if (nd.is_leaf()) {
        jn["weight"] = nd.weight;
      } else {
        jn["feature"] = nd.feature;
        jn["threshold"] = nd.threshold;
        jn["default_left"] = nd.default_left;
        jn["left"] = nd.left;
        jn["right"] = nd.right;
      }
      jn["cover"] = nd.cover;
      nodes.push_back(std::move(jn));
    }
    nlohmann::ordered_json jt;
    jt["nodes"] = std::move(nodes);
    trees.push_back(std::move(jt));
  }
  j["trees"] = std::move(trees);
  return j;
}

GbdtModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != "fraudfuse-gbdt") {
      throw Error(ErrorKind::model_integrity, "not a fraudfuse-gbdt model file");
    }
    if (j.at("version").get<int>() != 1) {
      throw Error(ErrorKind::model_integrity,
                  "unsupported model version " + j.at("version").dump());
    }

    GbdtModel model;
    model.base_margin = j.at("base_margin").get<double>();
    {
      const std::string hex = j.at("schema_fingerprint").get<std::string>();
      try {
        model.schema_fp = std::stoull(hex, nullptr, 16);
      } catch (const std::exception&) {
        throw Error(ErrorKind::model_integrity, "bad schema fingerprint '" + hex + "'");
      }
    }
    const auto& jp = j.at("params");
    model.params.n_trees = jp.at("n_trees").get<size_t>();
    model.params.learning_rate = jp.at("learning_rate").get<double>();
    model.params.max_depth = jp.at("max_depth").get<size_t>();
    model.params.min_child_weight = jp.at("min_child_weight").get<double>();
    model.params.l2_reg = jp.at("l2_reg").get<double>();
    model.params.subsample = jp.at("subsample").get<double>();
    model.params.n_bins = jp.at("n_bins").get<size_t>();
    model.params.pos_weight = jp.at("pos_weight").get<double>();
    model.params.seed = jp.at("seed").get<uint64_t>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();

    for (const auto& jt : j.at("trees")) {
      Tree tree;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode nd;
        if (jn.contains("feature")) {
          nd.feature = jn.at("feature").get<int32_t>();
          nd.threshold = jn.at("threshold").get<double>();
          nd.default_left = jn.at("default_left").get<bool>();
          nd.left = jn.at("left").get<int32_t>();
          nd.right = jn.at("right").get<int32_t>();
        } else {
          nd.weight = jn.at("weight").get<double>();
        }
        nd.cover = jn.at("cover").get<double>();
        tree.nodes.push_back(nd);
      }
      if (tree.nodes.empty()) {
        throw Error(ErrorKind::model_integrity, "tree with no nodes");
      }
      const auto n_nodes = static_cast<int32_t>(tree.nodes.size());
      for (const TreeNode& nd : tree.nodes) {
        if (nd.is_leaf()) continue;
        if (nd.feature >= static_cast<int32_t>(model.feature_names.size())) {
          throw Error(ErrorKind::model_integrity, "node feature index out of range");
        }
        if (nd.left <= 0 || nd.left >= n_nodes || nd.right <= 0 || nd.right >= n_nodes) {
          throw Error(ErrorKind::model_integrity, "node child index out of range");
        }
      }
      model.trees.push_back(std::move(tree));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::model_integrity, std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const GbdtModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write model file: " + path.string());
  out << model_to_json(model).dump(1) << "\n";
  if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

GbdtModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open model file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::model_integrity,
                "model file " + path.string() + " is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace fraudfuse
