#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bta {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold (bad range, bad threshold, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Text input could not be parsed. `line` and `column` are 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(decorate(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string decorate(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    std::string out = "line " + std::to_string(line);
    if (column != 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

/// Structurally valid input that breaks a domain invariant (dangling reference, duplicate id).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Persisted data disagrees with its manifest.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// The adaptive comfort model does not apply to the given conditions.
class ModelInapplicable : public Error {
 public:
  using Error::Error;
};

/// An analysis cannot produce a defined result from the data it was given.
class AnalysisError : public Error {
 public:
  using Error::Error;
};

}  // namespace bta
