#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dpsc/dataset.hpp"
#include "dpsc/errors.hpp"
#include "dpsc/solver.hpp"

namespace dpsc {

/// Shortest text form that round-trips a double exactly.
inline std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

// Dataset cache format: one header line `#dpsc-dataset v1 n=<n> p=<p>`,
// then one CSV row `y,x1,...,xp` per observation.

inline void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out.is_open()) throw IoError("cannot write dataset file: " + path);
  out << "#dpsc-dataset v1 n=" << data.n() << " p=" << data.p() << "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.labels[i]);
    for (Eigen::Index j = 0; j < data.p(); ++j)
      out << ',' << format_double(data.features(i, j));
    out << "\n";
  }
  if (!out) throw IoError("failed while writing dataset file: " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw IoError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset file is empty: " + path);
  long n = 0;
  long p = 0;
  if (std::sscanf(line.c_str(), "#dpsc-dataset v1 n=%ld p=%ld", &n, &p) != 2)
    throw IoError("bad dataset header in " + path);
  if (n < 1 || p < 1) throw IoError("bad dataset dimensions in " + path);

  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw ParseError("unexpected end of file", i + 2, "-");
    std::stringstream ss(line);
    std::string cell;
    for (long j = 0; j <= p; ++j) {
      if (!std::getline(ss, cell, ','))
        throw ParseError("row has too few cells", i + 2, "-");
      char* end = nullptr;
      const double value = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw ParseError("non-numeric cell '" + cell + "'", i + 2, std::to_string(j));
      if (j == 0) y[i] = value;
      else x(i, j - 1) = value;
    }
    if (std::getline(ss, cell, ','))
      throw ParseError("row has too many cells", i + 2, "-");
  }
  return Dataset(std::move(x), std::move(y));
}

/// Per-iteration diagnostics as CSV.
inline void save_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out.is_open()) throw IoError("cannot write trace file: " + path);
  out << "iteration,objective,primal_residual,epsilon_spent_so_far\n";
  for (const TraceRow& row : trace)
    out << row.iteration << ',' << format_double(row.objective) << ','
        << format_double(row.primal_residual) << ','
        << format_double(row.epsilon_so_far) << "\n";
  if (!out) throw IoError("failed while writing trace file: " + path);
}

}  // namespace dpsc
