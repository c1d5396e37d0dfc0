#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace resadapt {

/// Failure classes; the CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kValidation,   // bad values, broken invariants, unknown ids
  kParse,        // malformed input bytes or files, I/O
  kConvergence,  // numerical search failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::kValidation, what) {}
};

/// Parse failure at a byte offset (binary formats) or a 1-based row (CSV).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : Error(ErrorKind::kParse,
              what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Row-level data error in a CSV input; row numbers count the header as 1.
class RowError : public ValidationError {
 public:
  RowError(const std::string& file, std::size_t row, const std::string& what)
      : ValidationError(file + ":" + std::to_string(row) + ": " + what),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what)
      : Error(ErrorKind::kConvergence, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kParse, what) {}
};

}  // namespace resadapt
