#pragma once

#include <cmath>
#include <stdexcept>

namespace dpsc {

enum class LossKind { logistic };

/// Smooth margin loss together with the uniform derivative bounds the privacy
/// arithmetic depends on: |O'| <= c1 and 0 <= O'' <= c2.
struct LossSpec {
  LossKind kind = LossKind::logistic;
  double c1 = 1.0;
  double c2 = 0.25;

  static LossSpec logistic() { return LossSpec{}; }

  void validate() const {
    if (!(c1 > 0.0) || !std::isfinite(c1) || !(c2 > 0.0) || !std::isfinite(c2))
      throw std::invalid_argument("loss derivative bounds must be finite and positive");
  }
};

/// log(1 + exp(-margin)), branched so large |margin| cannot overflow.
inline double logistic_loss(double margin) {
  if (margin > 30.0) return std::exp(-margin);
  if (margin < -30.0) return -margin;
  return std::log1p(std::exp(-margin));
}

/// O'(margin) = -1 / (1 + exp(margin)); always in [-1, 0].
inline double logistic_loss_derivative(double margin) {
  if (margin >= 0.0) {
    const double e = std::exp(-margin);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(margin));
}

}  // namespace dpsc
