#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "fraudfuse/schema.hpp"

namespace fraudfuse {

// Labeled applicant table, column-major. Exactly one of numeric_cols[c] /
// cat_cols[c] is populated, matching schema.columns[c].kind. Missing values
// are NaN (numeric) or the empty string (categorical). Rows are kept in
// application-order, ascending.
struct LabeledDataset {
  FeatureSchema schema;
  bool encoded = false;
  std::vector<std::vector<double>> numeric_cols;
  std::vector<std::vector<std::string>> cat_cols;
  std::vector<uint8_t> labels;       // 0 = legitimate, 1 = fraud
  std::vector<int64_t> order_index;  // application chronology

  size_t n_rows() const { return labels.size(); }
  size_t n_cols() const { return schema.columns.size(); }
  size_t fraud_count() const;
  double fraud_rate() const;

  // Copies row i feature values into out[0..n_cols). All columns must be
  // numeric (true for any encoded dataset).
  void copy_row(size_t i, double* out) const;

  // Structural checks: per-column sizes, binary labels, sorted order_index.
  void validate() const;
};

// Reads a header CSV into a raw (un-encoded) dataset. Rows are sorted
// ascending by the order column; ties are kept in file order with a warning
// on stderr. Empty cells become missing markers.
LabeledDataset ingest_csv(const std::filesystem::path& path, const DataSchemaFile& file);

// Writes the CSV form ingest_csv accepts: order column, label column, then
// schema columns. Round-trips raw datasets exactly.
void write_csv(const LabeledDataset& ds, const DataSchemaFile& file,
               const std::filesystem::path& path);

// One-hot expansion against schema-declared category lists. Numeric columns
// pass through; a categorical of cardinality k becomes k indicator columns
// named "column=category"; a missing categorical is NaN in all k indicators.
LabeledDataset encode(const LabeledDataset& ds);

// Chronological partition: first floor(fraction * n) rows train, rest test.
std::pair<LabeledDataset, LabeledDataset> time_split(const LabeledDataset& ds,
                                                     double train_fraction);
// Same, with an explicit train row count.
std::pair<LabeledDataset, LabeledDataset> time_split_at(const LabeledDataset& ds,
                                                        size_t train_size);

// Keeps only columns whose group is in the scenario, preserving column order.
LabeledDataset select_scenario(const LabeledDataset& ds, const Scenario& scenario);

}  // namespace fraudfuse
