#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dpsc {

/// Slack on the unit row-norm requirement, to absorb rounding in preprocessing.
inline constexpr double kRowNormSlack = 1e-12;

/// Binary classification sample: n x p feature matrix with labels in {-1, +1}.
/// Every feature row must have Euclidean norm <= 1; construction enforces it.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;

  Dataset(Eigen::MatrixXd x, Eigen::VectorXd y)
      : features(std::move(x)), labels(std::move(y)) {
    if (features.rows() < 1 || features.cols() < 1)
      throw std::invalid_argument("dataset must have at least one row and one column");
    if (labels.size() != features.rows())
      throw std::invalid_argument("label count does not match feature rows");
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      if (!features.row(i).allFinite())
        throw std::invalid_argument("non-finite feature at row " + std::to_string(i));
      if (features.row(i).norm() > 1.0 + kRowNormSlack)
        throw std::invalid_argument("feature row " + std::to_string(i) +
                                    " has norm > 1; preprocess the data first");
      if (labels[i] != 1.0 && labels[i] != -1.0)
        throw std::invalid_argument("label at row " + std::to_string(i) +
                                    " is not -1 or +1");
    }
  }

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index p() const { return features.cols(); }
};

}  // namespace dpsc
