#pragma once

#include <stdexcept>
#include <string>

namespace topicflow {

/// Malformed input file; carries the 1-based line (0 when not applicable).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message)
      : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " +
                           message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Structurally invalid data (bad graph, bad dataset, bad arguments).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing model, bad path or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hook missing, failing, or returning something the dialogue cannot use.
class HookError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace topicflow
