#include "fraudfuse/csv.hpp"

#include <charconv>
#include <system_error>

#include "fraudfuse/errors.hpp"

namespace fraudfuse {

CsvReader::CsvReader(const std::filesystem::path& path) : path_(path.string()) {
  in_.open(path, std::ios::binary);
  if (!in_) throw Error(ErrorKind::io, "cannot open CSV file: " + path_);
  if (!read_record(header_)) throw Error(ErrorKind::data, "empty CSV file: " + path_);
}

bool CsvReader::next_row(std::vector<std::string>& fields) {
  if (!read_record(fields)) return false;
  if (fields.size() != header_.size()) {
    throw Error(ErrorKind::data, path_ + ":" + std::to_string(line_) + ": expected " +
                                     std::to_string(header_.size()) + " fields, got " +
                                     std::to_string(fields.size()));
  }
  return true;
}

bool CsvReader::read_record(std::vector<std::string>& fields) {
  fields.clear();
  int c = in_.get();
  if (c == EOF) return false;
  ++line_;
  std::string cell;
  bool quoted = false;
  for (;;) {
    if (c == EOF) {
      fields.push_back(std::move(cell));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        const int peek = in_.peek();
        if (peek == '"') {
          in_.get();
          cell.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"' && cell.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cell));
      cell.clear();
    } else if (ch == '\n') {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      fields.push_back(std::move(cell));
      return true;
    } else {
      cell.push_back(ch);
    }
    c = in_.get();
  }
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : path_(path.string()) {
  out_.open(path, std::ios::binary);
  if (!out_) throw Error(ErrorKind::io, "cannot open file for writing: " + path_);
}

namespace {
bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}
}  // namespace

void CsvWriter::write_row(const std::vector<std::string>& fields) {
  std::string line;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line.push_back(',');
    const std::string& f = fields[i];
    if (needs_quoting(f)) {
      line.push_back('"');
      for (char ch : f) {
        if (ch == '"') line.push_back('"');
        line.push_back(ch);
      }
      line.push_back('"');
    } else {
      line += f;
    }
  }
  line.push_back('\n');
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  if (!out_) throw Error(ErrorKind::io, "write failed: " + path_);
}

void CsvWriter::close() {
  if (out_.is_open()) {
    out_.close();
    if (!out_) throw Error(ErrorKind::io, "close failed: " + path_);
  }
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

bool parse_int64(const std::string& s, int64_t& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace fraudfuse
