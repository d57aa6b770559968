#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "dpsc/dataset.hpp"
#include "dpsc/loss.hpp"
#include "dpsc/penalty.hpp"

namespace dpsc {

/// Consensus iterate triple: sparse step z, smooth step w, scaled dual v.
struct AdmmState {
  Eigen::VectorXd z;
  Eigen::VectorXd w;
  Eigen::VectorXd v;
  int k = 0;

  void validate() const {
    if (z.size() != w.size() || w.size() != v.size())
      throw std::invalid_argument("state vectors must share one length");
    if (!z.allFinite() || !w.allFinite() || !v.allFinite())
      throw std::invalid_argument("state contains non-finite entries");
    if (k < 0) throw std::invalid_argument("iteration index must be >= 0");
  }
};

/// Regularized empirical risk at an arbitrary point:
/// (1/n) sum_i O(y_i point^T x_i) + P_lambda(point).
inline double objective_at(const Eigen::VectorXd& point, const Dataset& data,
                           const LossSpec& loss, const PenaltySpec& penalty) {
  if (point.size() != data.p())
    throw std::invalid_argument("point length does not match feature columns");
  if (loss.kind != LossKind::logistic)
    throw std::invalid_argument("unsupported loss kind");
  const Eigen::VectorXd margins = (data.features * point).cwiseProduct(data.labels);
  double total = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) total += logistic_loss(margins[i]);
  return total / static_cast<double>(data.n()) + penalty_value(penalty, point);
}

/// Diagnostic objective at the smooth iterate w. The penalty is evaluated at w
/// even though w is never exactly sparse; callers wanting the sparse view can
/// evaluate objective_at on state.z instead.
inline double objective_value(const AdmmState& state, const Dataset& data,
                              const LossSpec& loss, const PenaltySpec& penalty) {
  return objective_at(state.w, data, loss, penalty);
}

}  // namespace dpsc
