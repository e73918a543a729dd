#pragma once

#include <stdexcept>
#include <string>

namespace fraudfuse {

// Error taxonomy shared by every module. The CLI maps kinds onto exit codes:
// config/schema/argument problems exit 2, everything else exits 1.
enum class ErrorKind {
  schema,           // dataset/model schema mismatch, missing columns
  data,             // malformed cell values, bad labels
  config,           // invalid configuration or parameters
  argument,         // precondition violation on an operation argument
  training,         // unusable training data (e.g. single class)
  metric,           // metric undefined for the given inputs
  model_integrity,  // corrupt or inconsistent model internals
  io,               // file system failures
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::schema: return "schema";
    case ErrorKind::data: return "data";
    case ErrorKind::config: return "config";
    case ErrorKind::argument: return "argument";
    case ErrorKind::training: return "training";
    case ErrorKind::metric: return "metric";
    case ErrorKind::model_integrity: return "model-integrity";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const { return kind_; }

  // Message without the kind prefix, for re-wrapping with more context.
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace fraudfuse
