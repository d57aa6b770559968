#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "dpsc/dataset.hpp"

namespace dpsc {

/// Fraction of test points whose predicted sign disagrees with the label.
/// A margin of exactly zero predicts +1, matching the generator's boundary rule.
inline double classification_error(const Eigen::VectorXd& w, const Dataset& test) {
  if (w.size() != test.p())
    throw std::invalid_argument("classifier length does not match feature columns");
  if (test.n() < 1) throw std::invalid_argument("test set is empty");
  const Eigen::VectorXd scores = test.features * w;
  long wrong = 0;
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    const double predicted = scores[i] >= 0.0 ? 1.0 : -1.0;
    if (predicted != test.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(test.n());
}

/// Coefficient-space error (1/p) ||w_hat - w_true||^2; defined when the true
/// coefficients are known (synthetic data).
inline double coefficient_mse(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_true) {
  if (w_hat.size() != w_true.size())
    throw std::invalid_argument("coefficient vectors differ in length");
  if (w_hat.size() < 1) throw std::invalid_argument("coefficient vectors are empty");
  return (w_hat - w_true).squaredNorm() / static_cast<double>(w_hat.size());
}

/// Probability-space substitute for real data with no known coefficients:
/// (1/n) sum (sigmoid(w^T x_i) - 1{y_i = 1})^2.
inline double brier_score(const Eigen::VectorXd& w, const Dataset& data) {
  if (w.size() != data.p())
    throw std::invalid_argument("classifier length does not match feature columns");
  const Eigen::VectorXd scores = data.features * w;
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double prob = 1.0 / (1.0 + std::exp(-scores[i]));
    const double target = data.labels[i] == 1.0 ? 1.0 : 0.0;
    total += (prob - target) * (prob - target);
  }
  return total / static_cast<double>(data.n());
}

struct SupportCounts {
  long correct_zeros = 0;    // estimated zero where the truth is zero
  long incorrect_zeros = 0;  // estimated zero where the truth is nonzero
};

/// Variable-selection counts on the sparse iterate against the true support.
inline SupportCounts support_counts(const Eigen::VectorXd& z_final,
                                    const Eigen::VectorXd& w_true, double threshold) {
  if (z_final.size() != w_true.size())
    throw std::invalid_argument("coefficient vectors differ in length");
  if (!(threshold >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
  SupportCounts counts;
  for (Eigen::Index i = 0; i < z_final.size(); ++i) {
    if (std::abs(z_final[i]) > threshold) continue;
    if (w_true[i] == 0.0) ++counts.correct_zeros;
    else ++counts.incorrect_zeros;
  }
  return counts;
}

struct MetricsReport {
  double ce = 0.0;
  double mse = 0.0;
  long can_zero = 0;
  long ican_zero = 0;
  double support_threshold = 1e-6;
};

}  // namespace dpsc
