#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fraudfuse {

// The three alternative-data sources a column can originate from.
enum class FeatureGroup { super_app, mobile, credit_bureau };

inline constexpr std::array<FeatureGroup, 3> kAllGroups = {
    FeatureGroup::super_app, FeatureGroup::mobile, FeatureGroup::credit_bureau};

std::string to_string(FeatureGroup g);
FeatureGroup group_from_string(std::string_view s);

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
  std::string name;
  FeatureGroup group = FeatureGroup::super_app;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> categories;  // declared category list, categorical only
  std::string source;                   // raw column behind an encoded indicator; empty for raw

  size_t cardinality() const { return categories.size(); }
};

struct FeatureSchema {
  std::vector<ColumnSpec> columns;

  size_t n_columns() const { return columns.size(); }
  size_t encoded_column_count() const;
  size_t column_index(std::string_view name) const;  // npos if absent
  std::vector<size_t> group_columns(const std::set<FeatureGroup>& groups) const;

  // Duplicate names, empty category lists, duplicate categories -> ErrorKind::config.
  void validate() const;

  static constexpr size_t npos = static_cast<size_t>(-1);
};

// Stable 64-bit digest of column names, groups, kinds and category lists.
// Models store it and refuse to score data encoded under a different schema.
uint64_t schema_fingerprint(const FeatureSchema& schema);
std::string fingerprint_hex(uint64_t fp);

nlohmann::ordered_json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);

// Sidecar schema file: {"columns": [...], "label_column": ..., "order_column": ...}.
struct DataSchemaFile {
  FeatureSchema schema;
  std::string label_column = "is_fraud";
  std::string order_column = "application_order";
};

DataSchemaFile load_schema_file(const std::filesystem::path& path);
void save_schema_file(const DataSchemaFile& file, const std::filesystem::path& path);

// One of the six supported input-data combinations:
// C, S, M, S+M, S+C, S+M+C.
struct Scenario {
  std::string id;
  std::set<FeatureGroup> groups;

  bool operator==(const Scenario& other) const { return id == other.id; }

  static Scenario from_id(std::string_view id);
  static const std::vector<Scenario>& all_six();
};

}  // namespace fraudfuse
