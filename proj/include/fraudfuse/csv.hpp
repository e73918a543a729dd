#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fraudfuse {

// Streaming reader for comma-separated files with a header row. Handles
// RFC-4180 quoting ("" escapes, embedded commas/newlines) and trailing \r.
// Empty cells are kept as empty strings; callers decide what missing means.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }

  // Fills `fields` with the next record. Returns false at end of file.
  // Throws ErrorKind::data if the record's field count differs from the header.
  bool next_row(std::vector<std::string>& fields);

  // 1-based line number of the most recently returned record.
  size_t line_number() const { return line_; }

 private:
  bool read_record(std::vector<std::string>& fields);

  std::ifstream in_;
  std::string path_;
  std::vector<std::string> header_;
  size_t line_ = 0;
};

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void write_row(const std::vector<std::string>& fields);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
};

// Shortest round-trip formatting via std::to_chars.
std::string format_double(double v);

// Strict full-string parse; returns false on any leftover characters.
bool parse_double(const std::string& s, double& out);
bool parse_int64(const std::string& s, int64_t& out);

}  // namespace fraudfuse
