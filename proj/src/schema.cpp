#include "fraudfuse/schema.hpp"

#include <fstream>
#include <unordered_set>

#include "fraudfuse/errors.hpp"
#include "fraudfuse/rng.hpp"

namespace fraudfuse {

std::string to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::super_app: return "super_app";
    case FeatureGroup::mobile: return "mobile";
    case FeatureGroup::credit_bureau: return "credit_bureau";
  }
  return "?";
}

FeatureGroup group_from_string(std::string_view s) {
  if (s == "super_app") return FeatureGroup::super_app;
  if (s == "mobile") return FeatureGroup::mobile;
  if (s == "credit_bureau") return FeatureGroup::credit_bureau;
  throw Error(ErrorKind::config, "unknown feature group: " + std::string(s));
}

size_t FeatureSchema::encoded_column_count() const {
  size_t n = 0;
  for (const auto& c : columns) {
    n += c.kind == ColumnKind::numeric ? 1 : c.cardinality();
  }
  return n;
}

size_t FeatureSchema::column_index(std::string_view name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return npos;
}

std::vector<size_t> FeatureSchema::group_columns(const std::set<FeatureGroup>& groups) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (groups.count(columns[i].group)) out.push_back(i);
  }
  return out;
}

void FeatureSchema::validate() const {
  if (columns.empty()) throw Error(ErrorKind::config, "schema has no columns");
  std::unordered_set<std::string> names;
  for (const auto& c : columns) {
    if (c.name.empty()) throw Error(ErrorKind::config, "schema column with empty name");
    if (!names.insert(c.name).second) {
      throw Error(ErrorKind::config, "duplicate schema column: " + c.name);
    }
    if (c.kind == ColumnKind::categorical) {
      if (c.categories.empty()) {
        throw Error(ErrorKind::config, "categorical column without categories: " + c.name);
      }
      std::unordered_set<std::string> cats;
      for (const auto& cat : c.categories) {
        if (!cats.insert(cat).second) {
          throw Error(ErrorKind::config, "duplicate category '" + cat + "' in column " + c.name);
        }
      }
    } else if (!c.categories.empty()) {
      throw Error(ErrorKind::config, "numeric column with categories: " + c.name);
    }
  }
}

uint64_t schema_fingerprint(const FeatureSchema& schema) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view s) {
    h = detail::fnv1a64(h, s.data(), s.size());
    h = detail::fnv1a64(h, "\x1f", 1);
  };
  for (const auto& c : schema.columns) {
    mix(c.name);
    mix(to_string(c.group));
    mix(c.kind == ColumnKind::numeric ? "num" : "cat");
    for (const auto& cat : c.categories) mix(cat);
    mix(";");
  }
  return detail::splitmix64(h);
}

std::string fingerprint_hex(uint64_t fp) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[fp & 0xF];
    fp >>= 4;
  }
  return s;
}

nlohmann::ordered_json schema_to_json(const FeatureSchema& schema) {
  nlohmann::ordered_json cols = nlohmann::ordered_json::array();
  for (const auto& c : schema.columns) {
    nlohmann::ordered_json jc;
    jc["name"] = c.name;
    jc["group"] = to_string(c.group);
    jc["kind"] = c.kind == ColumnKind::numeric ? "numeric" : "categorical";
    if (c.kind == ColumnKind::categorical) jc["categories"] = c.categories;
    if (!c.source.empty()) jc["source"] = c.source;
    cols.push_back(std::move(jc));
  }
  nlohmann::ordered_json j;
  j["columns"] = std::move(cols);
  return j;
}

FeatureSchema schema_from_json(const nlohmann::json& j) {
  if (!j.contains("columns") || !j["columns"].is_array()) {
    throw Error(ErrorKind::config, "schema JSON missing 'columns' array");
  }
  FeatureSchema schema;
  for (const auto& jc : j["columns"]) {
    ColumnSpec c;
    c.name = jc.at("name").get<std::string>();
    c.group = group_from_string(jc.at("group").get<std::string>());
    const std::string kind = jc.at("kind").get<std::string>();
    if (kind == "numeric") {
      c.kind = ColumnKind::numeric;
    } else if (kind == "categorical") {
      c.kind = ColumnKind::categorical;
      c.categories = jc.at("categories").get<std::vector<std::string>>();
    } else {
      throw Error(ErrorKind::config, "unknown column kind: " + kind);
    }
    if (jc.contains("source")) c.source = jc["source"].get<std::string>();
    schema.columns.push_back(std::move(c));
  }
  schema.validate();
  return schema;
}

DataSchemaFile load_schema_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open schema file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, "invalid schema JSON in " + path.string() + ": " + e.what());
  }
  DataSchemaFile file;
  file.schema = schema_from_json(j);
  if (j.contains("label_column")) file.label_column = j["label_column"].get<std::string>();
  if (j.contains("order_column")) file.order_column = j["order_column"].get<std::string>();
  return file;
}

void save_schema_file(const DataSchemaFile& file, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["label_column"] = file.label_column;
  j["order_column"] = file.order_column;
  j["columns"] = schema_to_json(file.schema)["columns"];
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write schema file: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

namespace {
std::set<FeatureGroup> groups_for_id(const std::string& id) {
  std::set<FeatureGroup> groups;
  size_t start = 0;
  while (start <= id.size()) {
    const size_t plus = id.find('+', start);
    const std::string part = id.substr(start, plus == std::string::npos ? plus : plus - start);
    if (part == "S") {
      groups.insert(FeatureGroup::super_app);
    } else if (part == "M") {
      groups.insert(FeatureGroup::mobile);
    } else if (part == "C") {
      groups.insert(FeatureGroup::credit_bureau);
    } else {
      return {};
    }
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  return groups;
}
}  // namespace

Scenario Scenario::from_id(std::string_view id_view) {
  const std::string id(id_view);
  for (const auto& s : all_six()) {
    if (s.id == id) return s;
  }
  throw Error(ErrorKind::config,
              "unknown scenario '" + id + "' (expected one of C, S, M, S+M, S+C, S+M+C)");
}

const std::vector<Scenario>& Scenario::all_six() {
  static const std::vector<Scenario> scenarios = [] {
    std::vector<Scenario> v;
    for (const char* id : {"C", "S", "M", "S+M", "S+C", "S+M+C"}) {
      v.push_back(Scenario{id, groups_for_id(id)});
    }
    return v;
  }();
  return scenarios;
}

}  // namespace fraudfuse
