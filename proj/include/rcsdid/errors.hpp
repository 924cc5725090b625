#pragma once

#include <stdexcept>
#include <string>

namespace rcsdid {

// Input could not be interpreted: bad columns, unparsable values, invalid
// layouts or configurations. The CLI maps all of these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, long row)
      : ValidationError("row " + std::to_string(row) + ": " + what), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

// Mathematically undefined request (e.g. fewer than two pre-periods for the
// first-difference variance, mismatched solver dimensions).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Weighted regression cannot identify tau. Exit code 2 in the CLI.
class DegenerateDesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Weight solver hit its iteration cap and the caller refused the iterate.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Monte Carlo run excluded too many replications.
class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rcsdid
