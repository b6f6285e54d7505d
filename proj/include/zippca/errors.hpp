#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zippca {

// Malformed input: wrong shapes, non-finite values, out-of-range settings.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Samples or taxa with zero total count.
class EmptySupportError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Malformed input file; line and column are 1-based, 0 when unknown.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Argument outside the mathematical domain of an operation (e.g. log of 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A row of the multinomial has no active taxon left.
class DegenerateSupportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// I - Sigma_i Lambda_j is not invertible (sigma2 * lambda2 >= 1).
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The fit produced a non-finite objective; the message carries a snapshot.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zippca
