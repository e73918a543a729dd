#include "fraudfuse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "fraudfuse/csv.hpp"
#include "fraudfuse/errors.hpp"

namespace fraudfuse {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string row_col(size_t row, const std::string& col) {
  return "row " + std::to_string(row) + ", column '" + col + "'";
}

// Rows [begin, end) of ds, all storage copied.
LabeledDataset subset_rows(const LabeledDataset& ds, size_t begin, size_t end) {
  LabeledDataset out;
  out.schema = ds.schema;
  out.encoded = ds.encoded;
  out.numeric_cols.resize(ds.numeric_cols.size());
  out.cat_cols.resize(ds.cat_cols.size());
  for (size_t c = 0; c < ds.n_cols(); ++c) {
    if (ds.schema.columns[c].kind == ColumnKind::numeric) {
      out.numeric_cols[c].assign(ds.numeric_cols[c].begin() + begin,
                                 ds.numeric_cols[c].begin() + end);
    } else {
      out.cat_cols[c].assign(ds.cat_cols[c].begin() + begin, ds.cat_cols[c].begin() + end);
    }
  }
  out.labels.assign(ds.labels.begin() + begin, ds.labels.begin() + end);
  out.order_index.assign(ds.order_index.begin() + begin, ds.order_index.begin() + end);
  return out;
}
}  // namespace

size_t LabeledDataset::fraud_count() const {
  size_t n = 0;
  for (uint8_t y : labels) n += y;
  return n;
}

double LabeledDataset::fraud_rate() const {
  return labels.empty() ? 0.0 : static_cast<double>(fraud_count()) / static_cast<double>(n_rows());
}

void LabeledDataset::copy_row(size_t i, double* out) const {
  for (size_t c = 0; c < n_cols(); ++c) {
    if (numeric_cols[c].empty()) {
      throw Error(ErrorKind::argument, "copy_row on non-numeric column '" + schema.columns[c].name + "'");
    }
    out[c] = numeric_cols[c][i];
  }
}

void LabeledDataset::validate() const {
  const size_t n = n_rows();
  if (order_index.size() != n) throw Error(ErrorKind::data, "order_index/label size mismatch");
  if (numeric_cols.size() != n_cols() || cat_cols.size() != n_cols()) {
    throw Error(ErrorKind::data, "column storage does not match schema");
  }
  for (size_t c = 0; c < n_cols(); ++c) {
    const bool is_num = schema.columns[c].kind == ColumnKind::numeric;
    const size_t got = is_num ? numeric_cols[c].size() : cat_cols[c].size();
    const size_t other = is_num ? cat_cols[c].size() : numeric_cols[c].size();
    if (got != n || other != 0) {
      throw Error(ErrorKind::data, "column '" + schema.columns[c].name + "' has wrong row count");
    }
  }
  for (uint8_t y : labels) {
    if (y > 1) throw Error(ErrorKind::data, "label out of {0,1}");
  }
  for (size_t i = 1; i < n; ++i) {
    if (order_index[i] < order_index[i - 1]) {
      throw Error(ErrorKind::data, "order_index not ascending at row " + std::to_string(i));
    }
  }
}

LabeledDataset ingest_csv(const std::filesystem::path& path, const DataSchemaFile& file) {
  file.schema.validate();
  CsvReader reader(path);
  const auto& header = reader.header();

  auto find_col = [&header](const std::string& name) -> size_t {
    for (size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return FeatureSchema::npos;
  };

  const size_t label_at = find_col(file.label_column);
  if (label_at == FeatureSchema::npos) {
    throw Error(ErrorKind::schema, "missing label column '" + file.label_column + "'");
  }
  const size_t order_at = find_col(file.order_column);
  if (order_at == FeatureSchema::npos) {
    throw Error(ErrorKind::schema, "missing order column '" + file.order_column + "'");
  }
  std::vector<size_t> col_at(file.schema.n_columns());
  for (size_t c = 0; c < file.schema.n_columns(); ++c) {
    col_at[c] = find_col(file.schema.columns[c].name);
    if (col_at[c] == FeatureSchema::npos) {
      throw Error(ErrorKind::schema, "missing column '" + file.schema.columns[c].name + "'");
    }
  }

  LabeledDataset ds;
  ds.schema = file.schema;
  ds.numeric_cols.resize(ds.n_cols());
  ds.cat_cols.resize(ds.n_cols());

  std::vector<std::string> fields;
  while (reader.next_row(fields)) {
    const size_t row = reader.line_number();

    double label_val = 0.0;
    if (!parse_double(fields[label_at], label_val) || (label_val != 0.0 && label_val != 1.0)) {
      throw Error(ErrorKind::data, "non-binary label '" + fields[label_at] + "' at row " +
                                       std::to_string(row));
    }
    ds.labels.push_back(static_cast<uint8_t>(label_val));

    int64_t order_val = 0;
    if (!parse_int64(fields[order_at], order_val)) {
      throw Error(ErrorKind::data,
                  "unparseable order value '" + fields[order_at] + "' at row " + std::to_string(row));
    }
    ds.order_index.push_back(order_val);

    for (size_t c = 0; c < ds.n_cols(); ++c) {
      const std::string& cell = fields[col_at[c]];
      if (ds.schema.columns[c].kind == ColumnKind::numeric) {
        double v = kNaN;
        if (!cell.empty() && !parse_double(cell, v)) {
          throw Error(ErrorKind::data, "unparseable numeric '" + cell + "' at " +
                                           row_col(row, ds.schema.columns[c].name));
        }
        ds.numeric_cols[c].push_back(v);
      } else {
        ds.cat_cols[c].push_back(cell);  // empty string = missing
      }
    }
  }

  // Sort ascending by order value, file order breaking ties.
  std::vector<size_t> perm(ds.n_rows());
  std::iota(perm.begin(), perm.end(), size_t{0});
  std::stable_sort(perm.begin(), perm.end(),
                   [&ds](size_t a, size_t b) { return ds.order_index[a] < ds.order_index[b]; });

  LabeledDataset sorted;
  sorted.schema = std::move(ds.schema);
  sorted.numeric_cols.resize(sorted.n_cols());
  sorted.cat_cols.resize(sorted.n_cols());
  sorted.labels.reserve(ds.n_rows());
  sorted.order_index.reserve(ds.n_rows());
  for (size_t i : perm) {
    sorted.labels.push_back(ds.labels[i]);
    sorted.order_index.push_back(ds.order_index[i]);
  }
  for (size_t c = 0; c < sorted.n_cols(); ++c) {
    if (sorted.schema.columns[c].kind == ColumnKind::numeric) {
      sorted.numeric_cols[c].reserve(perm.size());
      for (size_t i : perm) sorted.numeric_cols[c].push_back(ds.numeric_cols[c][i]);
    } else {
      sorted.cat_cols[c].reserve(perm.size());
      for (size_t i : perm) sorted.cat_cols[c].push_back(std::move(ds.cat_cols[c][i]));
    }
  }

  size_t ties = 0;
  for (size_t i = 1; i < sorted.n_rows(); ++i) {
    ties += sorted.order_index[i] == sorted.order_index[i - 1];
  }
  if (ties > 0) {
    std::cerr << "warning: " << ties << " order-index ties in " << path.string()
              << "; tied rows kept in file order\n";
  }
  return sorted;
}

void write_csv(const LabeledDataset& ds, const DataSchemaFile& file,
               const std::filesystem::path& path) {
  if (ds.schema.columns.size() != file.schema.columns.size()) {
    throw Error(ErrorKind::argument, "dataset/schema column count mismatch in write_csv");
  }
  CsvWriter writer(path);
  std::vector<std::string> fields;
  fields.push_back(file.order_column);
  fields.push_back(file.label_column);
  for (const auto& c : ds.schema.columns) fields.push_back(c.name);
  writer.write_row(fields);

  for (size_t i = 0; i < ds.n_rows(); ++i) {
    fields.clear();
    fields.push_back(std::to_string(ds.order_index[i]));
    fields.push_back(ds.labels[i] ? "1" : "0");
    for (size_t c = 0; c < ds.n_cols(); ++c) {
      if (ds.schema.columns[c].kind == ColumnKind::numeric) {
        const double v = ds.numeric_cols[c][i];
        fields.push_back(std::isnan(v) ? std::string() : format_double(v));
      } else {
        fields.push_back(ds.cat_cols[c][i]);
      }
    }
    writer.write_row(fields);
  }
  writer.close();
}

LabeledDataset encode(const LabeledDataset& ds) {
  if (ds.encoded) throw Error(ErrorKind::argument, "dataset is already encoded");

  LabeledDataset out;
  out.encoded = true;
  out.labels = ds.labels;
  out.order_index = ds.order_index;

  const size_t n = ds.n_rows();
  for (size_t c = 0; c < ds.n_cols(); ++c) {
    const ColumnSpec& col = ds.schema.columns[c];
    if (col.kind == ColumnKind::numeric) {
      ColumnSpec spec;
      spec.name = col.name;
      spec.group = col.group;
      spec.kind = ColumnKind::numeric;
      spec.source = col.name;
      out.schema.columns.push_back(std::move(spec));
      out.numeric_cols.push_back(ds.numeric_cols[c]);
      continue;
    }

    const size_t k = col.cardinality();
    const size_t first = out.numeric_cols.size();
    for (size_t j = 0; j < k; ++j) {
      ColumnSpec spec;
      spec.name = col.name + "=" + col.categories[j];
      spec.group = col.group;
      spec.kind = ColumnKind::numeric;
      spec.source = col.name;
      out.schema.columns.push_back(std::move(spec));
      out.numeric_cols.emplace_back(n, 0.0);
    }
    for (size_t i = 0; i < n; ++i) {
      const std::string& v = ds.cat_cols[c][i];
      if (v.empty()) {
        for (size_t j = 0; j < k; ++j) out.numeric_cols[first + j][i] = kNaN;
        continue;
      }
      size_t hit = k;
      for (size_t j = 0; j < k; ++j) {
        if (col.categories[j] == v) {
          hit = j;
          break;
        }
      }
      if (hit == k) {
        throw Error(ErrorKind::data, "unseen category '" + v + "' in column '" + col.name + "'");
      }
      out.numeric_cols[first + hit][i] = 1.0;
    }
  }
  out.cat_cols.resize(out.n_cols());
  return out;
}

namespace {
void check_sorted(const LabeledDataset& ds) {
  for (size_t i = 1; i < ds.n_rows(); ++i) {
    if (ds.order_index[i] < ds.order_index[i - 1]) {
      throw Error(ErrorKind::argument, "dataset not sorted by order index");
    }
  }
}
}  // namespace

std::pair<LabeledDataset, LabeledDataset> time_split(const LabeledDataset& ds,
                                                     double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::argument, "train_fraction must be in (0,1)");
  }
  const size_t n_train =
      static_cast<size_t>(std::floor(train_fraction * static_cast<double>(ds.n_rows())));
  return time_split_at(ds, n_train);
}

std::pair<LabeledDataset, LabeledDataset> time_split_at(const LabeledDataset& ds,
                                                        size_t train_size) {
  if (train_size == 0 || train_size >= ds.n_rows()) {
    throw Error(ErrorKind::argument, "train size " + std::to_string(train_size) +
                                         " leaves an empty side of " + std::to_string(ds.n_rows()) +
                                         " rows");
  }
  check_sorted(ds);
  return {subset_rows(ds, 0, train_size), subset_rows(ds, train_size, ds.n_rows())};
}

LabeledDataset select_scenario(const LabeledDataset& ds, const Scenario& scenario) {
  LabeledDataset out;
  out.encoded = ds.encoded;
  out.labels = ds.labels;
  out.order_index = ds.order_index;
  for (size_t c = 0; c < ds.n_cols(); ++c) {
    if (!scenario.groups.count(ds.schema.columns[c].group)) continue;
    out.schema.columns.push_back(ds.schema.columns[c]);
    out.numeric_cols.push_back(ds.numeric_cols[c]);
    out.cat_cols.push_back(ds.cat_cols[c]);
  }
  if (out.schema.columns.empty()) {
    throw Error(ErrorKind::config, "scenario " + scenario.id + " selects no columns");
  }
  return out;
}

}  // namespace fraudfuse
