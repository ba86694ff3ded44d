#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace picscore {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a precondition (bad argument, empty class, out-of-range
/// probability). The CLI maps this to exit status 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed data row. `row()` is 1-based over data rows (header excluded),
/// 0 when the problem is not tied to a row.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t row, const std::string& what)
      : ValidationError(row == 0 ? what : "row " + std::to_string(row) + ": " + what),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Model file is unreadable, truncated or carries an unknown version.
class ModelFormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace picscore
