#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dpsc/dataset.hpp"
#include "dpsc/errors.hpp"

namespace dpsc {

enum class ColumnKind { numeric, categorical, label };

/// Declares how each named column of a CSV file is treated. Columns absent
/// from `columns` default to numeric. Exactly one column must be the label;
/// its raw values are mapped through positive_label / negative_label.
struct CsvSchema {
  std::map<std::string, ColumnKind> columns;
  std::string positive_label;
  std::string negative_label;

  std::string label_column() const {
    std::string found;
    for (const auto& [name, kind] : columns) {
      if (kind != ColumnKind::label) continue;
      if (!found.empty()) throw ConfigError("schema declares more than one label column");
      found = name;
    }
    if (found.empty()) throw ConfigError("schema declares no label column");
    return found;
  }

  void validate() const {
    label_column();
    if (positive_label.empty() || negative_label.empty())
      throw ConfigError("schema must name both raw label values");
    if (positive_label == negative_label)
      throw ConfigError("positive and negative label values must differ");
  }
};

/// What preprocessing did to the file: per-output-column max-abs scales, the
/// one-hot expansion of each categorical column, and how many rows had to be
/// shrunk onto the unit sphere.
struct PreprocessReport {
  std::vector<std::string> output_columns;
  Eigen::VectorXd column_scales;  // max |value| before scaling, per output column
  long rows_capped = 0;
  std::map<std::string, std::vector<std::string>> one_hot_map;
};

struct CsvLoadResult {
  Dataset data;
  PreprocessReport report;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_numeric_cell(const std::string& cell, long row,
                                 const std::string& column) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw ParseError("non-numeric cell '" + cell + "'", row, column);
  }
  if (used != cell.size()) throw ParseError("non-numeric cell '" + cell + "'", row, column);
  if (!std::isfinite(value)) throw ParseError("non-finite cell", row, column);
  return value;
}

}  // namespace detail

/// Read a comma-separated file (header row, '.' decimal point, UTF-8) into a
/// Dataset: one-hot expand categorical columns, map labels to {-1, +1}, scale
/// every feature column by its max absolute value, then cap each row norm at 1.
///
/// When `fitted` is given, its column scales and category sets are reused so a
/// second file lands in the same feature space; a category unseen at fit time
/// is a parse error.
inline CsvLoadResult load_csv(const std::string& path, const CsvSchema& schema,
                              const PreprocessReport* fitted = nullptr) {
  schema.validate();
  std::ifstream file(path);
  if (!file.is_open()) throw IoError("cannot open csv file: " + path);

  std::string line;
  if (!std::getline(file, line)) throw IoError("csv file has no header row: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = detail::split_csv_line(line);

  const std::string label_column = schema.label_column();
  long label_index = -1;
  std::vector<ColumnKind> kinds(header.size(), ColumnKind::numeric);
  for (std::size_t j = 0; j < header.size(); ++j) {
    auto it = schema.columns.find(header[j]);
    if (it != schema.columns.end()) kinds[j] = it->second;
    if (kinds[j] == ColumnKind::label) label_index = static_cast<long>(j);
  }
  if (label_index < 0)
    throw ConfigError("label column '" + label_column + "' not present in " + path);

  // First pass: raw cells, label mapping, and category collection.
  std::vector<std::vector<std::string>> rows;
  std::vector<double> labels;
  std::map<std::string, std::vector<std::string>> categories;
  if (fitted != nullptr) categories = fitted->one_hot_map;
  long row_number = 1;  // header is row 1
  while (std::getline(file, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       row_number, "-");
    const std::string& raw_label = cells[static_cast<std::size_t>(label_index)];
    if (raw_label.empty()) throw ParseError("missing label", row_number, label_column);
    if (raw_label == schema.positive_label) labels.push_back(1.0);
    else if (raw_label == schema.negative_label) labels.push_back(-1.0);
    else throw ParseError("unknown label value '" + raw_label + "'", row_number,
                          label_column);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (kinds[j] != ColumnKind::categorical) continue;
      auto& seen = categories[header[j]];
      if (std::find(seen.begin(), seen.end(), cells[j]) == seen.end()) {
        if (fitted != nullptr)
          throw ParseError("unknown category '" + cells[j] + "'", row_number, header[j]);
        seen.push_back(cells[j]);
      }
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw IoError("csv file has no data rows: " + path);

  // Expanded column layout, in header order with categories in first-seen order.
  std::vector<std::string> output_columns;
  std::vector<long> offsets(header.size(), -1);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (kinds[j] == ColumnKind::label) continue;
    offsets[j] = static_cast<long>(output_columns.size());
    if (kinds[j] == ColumnKind::categorical) {
      for (const auto& value : categories[header[j]])
        output_columns.push_back(header[j] + "=" + value);
    } else {
      output_columns.push_back(header[j]);
    }
  }
  const long out_p = static_cast<long>(output_columns.size());
  if (out_p < 1) throw ConfigError("schema leaves no feature columns in " + path);
  if (fitted != nullptr && output_columns != fitted->output_columns)
    throw ConfigError("csv columns do not match the fitted preprocessing: " + path);

  Eigen::MatrixXd features = Eigen::MatrixXd::Zero(static_cast<long>(rows.size()), out_p);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const long file_row = static_cast<long>(i) + 2;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (kinds[j] == ColumnKind::label) continue;
      if (kinds[j] == ColumnKind::categorical) {
        const auto& seen = categories[header[j]];
        const auto it = std::find(seen.begin(), seen.end(), rows[i][j]);
        features(static_cast<long>(i),
                 offsets[j] + static_cast<long>(it - seen.begin())) = 1.0;
      } else {
        features(static_cast<long>(i), offsets[j]) =
            detail::parse_numeric_cell(rows[i][j], file_row, header[j]);
      }
    }
  }

  PreprocessReport report;
  report.output_columns = output_columns;
  report.one_hot_map = std::move(categories);
  report.column_scales.resize(out_p);
  for (long j = 0; j < out_p; ++j) {
    const double scale = fitted != nullptr ? fitted->column_scales[j]
                                           : features.col(j).cwiseAbs().maxCoeff();
    report.column_scales[j] = scale;
    if (scale > 0.0) features.col(j) /= scale;
  }
  for (long i = 0; i < features.rows(); ++i) {
    const double norm = features.row(i).norm();
    if (norm > 1.0) {
      features.row(i) /= norm;
      ++report.rows_capped;
    }
  }

  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(labels.data(),
                                                  static_cast<long>(labels.size()));
  return {Dataset(std::move(features), std::move(y)), std::move(report)};
}

}  // namespace dpsc
