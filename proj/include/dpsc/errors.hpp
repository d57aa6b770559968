#pragma once

#include <stdexcept>
#include <string>

namespace dpsc {

/// Malformed run configuration or schema. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Infeasible privacy budget or a plan that fails validation. CLI exit code 3.
class AccountantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solver divergence or step-size failure. Carries the iteration where the
/// iterate went bad. CLI exit code 4.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int outer_iteration, int inner_iteration = -1)
      : std::runtime_error(what),
        outer_iteration(outer_iteration),
        inner_iteration(inner_iteration) {}

  int outer_iteration;
  int inner_iteration;  // -1 when the failure is not inside the inner loop
};

/// Unreadable or unwritable files. CLI exit code 5.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad cell or record in an input file; carries the 1-based location.
class ParseError : public IoError {
 public:
  ParseError(const std::string& what, long row, const std::string& column)
      : IoError(what + " (row " + std::to_string(row) + ", column " + column + ")"),
        row(row),
        column(column) {}

  long row;
  std::string column;
};

}  // namespace dpsc
