#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace archbert {

/// Malformed input document (graph JSON, vocab file, config, dataset line).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::string field = {})
      : std::runtime_error(format(what, line, field)), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& what, std::size_t line, const std::string& field) {
    std::string msg = "parse error";
    if (line > 0) msg += " at line " + std::to_string(line);
    if (!field.empty()) msg += " (field '" + field + "')";
    return msg + ": " + what;
  }

  std::size_t line_;
  std::string field_;
};

/// Well-formed input that violates a domain invariant.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shape mismatch or misuse of the autodiff engine.
class ShapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A NaN or infinity appeared in a computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace archbert
