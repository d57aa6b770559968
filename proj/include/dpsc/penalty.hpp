#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace dpsc {

enum class PenaltyKind { l1, l_half };

/// Sparsity penalty P_lambda. For the l1/2 quasi-norm the consensus step is
/// solved by reweighted l1 with a mu-smoothed denominator over `reweight_steps`
/// rounds; both knobs are ignored for plain l1.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::l1;
  double lambda = 0.0;
  double mu = 1e-4;
  int reweight_steps = 5;

  static PenaltySpec l1(double lambda) { return {PenaltyKind::l1, lambda, 0.0, 1}; }

  static PenaltySpec l_half(double lambda, double mu = 1e-4, int reweight_steps = 5) {
    return {PenaltyKind::l_half, lambda, mu, reweight_steps};
  }

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("penalty weight lambda must be finite and >= 0");
    if (kind == PenaltyKind::l_half) {
      if (!(mu > 0.0)) throw std::invalid_argument("l1/2 smoothing offset mu must be > 0");
      if (reweight_steps < 1)
        throw std::invalid_argument("l1/2 reweighting needs at least one round");
    }
  }
};

/// Scalar shrinkage operator: the exact minimizer of t|z| + (z - q)^2 / 2.
inline double soft_threshold(double q, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("soft_threshold needs a threshold >= 0");
  if (q >= t) return q - t;
  if (q <= -t) return q + t;
  return 0.0;
}

/// Penalty value at a point: lambda * ||w||_1 or lambda * sum_i |w_i|^(1/2).
inline double penalty_value(const PenaltySpec& penalty, const Eigen::VectorXd& w) {
  if (penalty.kind == PenaltyKind::l1) return penalty.lambda * w.lpNorm<1>();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) sum += std::sqrt(std::abs(w[i]));
  return penalty.lambda * sum;
}

namespace detail {
inline Eigen::VectorXd consensus_target(const Eigen::VectorXd& w, const Eigen::VectorXd& v,
                                        double c) {
  if (!(c > 0.0)) throw std::invalid_argument("consensus weight c must be > 0");
  if (w.size() != v.size()) throw std::invalid_argument("iterate and multiplier sizes differ");
  return w - v / c;
}
}  // namespace detail

/// Consensus step for the l1 penalty: coordinatewise shrinkage of Q = w - v/c.
inline Eigen::VectorXd z_update_l1(const Eigen::VectorXd& w, const Eigen::VectorXd& v,
                                   double lambda, double c) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  const Eigen::VectorXd q = detail::consensus_target(w, v, c);
  Eigen::VectorXd z(q.size());
  const double threshold = lambda / c;
  for (Eigen::Index i = 0; i < q.size(); ++i) z[i] = soft_threshold(q[i], threshold);
  return z;
}

/// Consensus step for the l1/2 penalty: T reweighted-l1 rounds from z = 1.
/// Each round minimizes the linearization of lambda * sum_i |z_i|^(1/2) at the
/// previous iterate, (c/2)||z - Q||^2 + lambda * sum_i |z_i| / (2 |z_i^t + mu|^(1/2)),
/// which is again coordinatewise shrinkage because the quadratic is separable.
/// The derivative of |z|^(1/2) supplies the factor 1/2 in the weight; without it
/// the fixed points are not stationary for the l1/2 objective.
inline Eigen::VectorXd z_update_lhalf(const Eigen::VectorXd& w, const Eigen::VectorXd& v,
                                      const PenaltySpec& penalty, double c) {
  if (penalty.kind != PenaltyKind::l_half)
    throw std::invalid_argument("z_update_lhalf requires an l1/2 penalty");
  penalty.validate();
  const Eigen::VectorXd q = detail::consensus_target(w, v, c);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(q.size());
  for (int round = 0; round < penalty.reweight_steps; ++round) {
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      const double weight = 0.5 / std::sqrt(std::abs(z[i] + penalty.mu));
      z[i] = soft_threshold(q[i], penalty.lambda * weight / c);
    }
  }
  return z;
}

/// Dispatch on the penalty kind.
inline Eigen::VectorXd z_update(const PenaltySpec& penalty, const Eigen::VectorXd& w,
                                const Eigen::VectorXd& v, double c) {
  return penalty.kind == PenaltyKind::l1 ? z_update_l1(w, v, penalty.lambda, c)
                                         : z_update_lhalf(w, v, penalty, c);
}

}  // namespace dpsc
