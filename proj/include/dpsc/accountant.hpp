#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dpsc/errors.hpp"
#include "dpsc/loss.hpp"

namespace dpsc {

namespace detail {
inline void require_positive_budget_args(int iterations, double c, long n, double c1,
                                         double c2) {
  if (iterations < 1) throw std::invalid_argument("iteration count must be >= 1");
  if (!(c > 0.0)) throw std::invalid_argument("consensus weight c must be > 0");
  if (n < 1) throw std::invalid_argument("data size n must be >= 1");
  if (!(c1 > 0.0) || !(c2 > 0.0))
    throw std::invalid_argument("loss derivative bounds must be > 0");
}
}  // namespace detail

/// Total privacy budget of a K-iteration run: K * (2*gamma*c1 + 2.8*c2) / (c*n).
/// Pure arithmetic; plan factories below report the c >= 2*c2/n precondition.
inline double epsilon_of(double gamma, int iterations, double c, long n, double c1,
                         double c2) {
  detail::require_positive_budget_args(iterations, c, n, c1, c2);
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  return static_cast<double>(iterations) * (2.0 * gamma * c1 + 2.8 * c2) /
         (c * static_cast<double>(n));
}

/// Smallest budget any positive gamma can reach: K * 2.8 * c2 / (c * n).
inline double min_feasible_epsilon(int iterations, double c, long n, double c2) {
  detail::require_positive_budget_args(iterations, c, n, 1.0, c2);
  return static_cast<double>(iterations) * 2.8 * c2 / (c * static_cast<double>(n));
}

/// Invert the budget formula: the gamma that spends exactly `epsilon` over K
/// iterations. Throws AccountantError when the budget is below the floor.
inline double gamma_for(double epsilon, int iterations, double c, long n, double c1,
                        double c2) {
  detail::require_positive_budget_args(iterations, c, n, c1, c2);
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  const double per_iteration_scaled = epsilon * c * static_cast<double>(n) /
                                      static_cast<double>(iterations);
  if (!(per_iteration_scaled > 2.8 * c2)) {
    std::ostringstream msg;
    msg << "epsilon below K*2.8*c2/(c*n); minimal achievable epsilon is "
        << min_feasible_epsilon(iterations, c, n, c2);
    throw AccountantError(msg.str());
  }
  return (per_iteration_scaled - 2.8 * c2) / (2.0 * c1);
}

struct PlanCheck {
  bool ok = true;
  std::string reason;
};

/// Extra validity range for the logistic instantiation:
/// c >= 1/(2n) and gamma <= c*n - 7/20. Both inequalities are closed.
inline PlanCheck validate_logistic_range(double c, long n, double gamma) {
  if (!(c > 0.0) || n < 1 || !(gamma > 0.0))
    throw std::invalid_argument("logistic range check needs positive arguments");
  if (c < 1.0 / (2.0 * static_cast<double>(n)))
    return {false, "c below 1/(2n)"};
  if (gamma > c * static_cast<double>(n) - 7.0 / 20.0)
    return {false, "gamma exceeds cn - 7/20"};
  return {true, ""};
}

/// Assembled privacy budget for one solver run. `valid` reflects the
/// per-iteration precondition c >= 2*c2/n; an invalid plan is reported, never
/// thrown, so grids can tabulate infeasible cells.
struct PrivacyPlan {
  double epsilon = std::numeric_limits<double>::infinity();
  double gamma = std::numeric_limits<double>::infinity();
  double per_iteration_epsilon = std::numeric_limits<double>::infinity();
  int iterations = 1;
  double c = 1.0;
  long n = 1;
  double c1 = 1.0;
  double c2 = 0.25;
  bool valid = true;
  std::string reason;
  bool private_run = true;  // false when the noise is switched off entirely

  static PrivacyPlan for_gamma(double gamma, int iterations, double c, long n,
                               const LossSpec& loss) {
    loss.validate();
    PrivacyPlan plan;
    plan.gamma = gamma;
    plan.iterations = iterations;
    plan.c = c;
    plan.n = n;
    plan.c1 = loss.c1;
    plan.c2 = loss.c2;
    plan.per_iteration_epsilon = epsilon_of(gamma, 1, c, n, loss.c1, loss.c2);
    plan.epsilon = static_cast<double>(iterations) * plan.per_iteration_epsilon;
    if (c < 2.0 * loss.c2 / static_cast<double>(n)) {
      plan.valid = false;
      plan.reason = "c below 2*c2/n";
    }
    return plan;
  }

  /// Plan for a requested budget. The stored epsilon is recomputed from the
  /// inverted gamma so the composition identity holds exactly; it matches the
  /// request to within 1e-12 relative rounding.
  static PrivacyPlan for_epsilon(double epsilon, int iterations, double c, long n,
                                 const LossSpec& loss) {
    loss.validate();
    const double gamma = gamma_for(epsilon, iterations, c, n, loss.c1, loss.c2);
    return for_gamma(gamma, iterations, c, n, loss);
  }

  /// Marker plan for noise-off runs; budget is infinite by construction.
  static PrivacyPlan non_private(int iterations, double c, long n, const LossSpec& loss) {
    loss.validate();
    detail::require_positive_budget_args(iterations, c, n, loss.c1, loss.c2);
    PrivacyPlan plan;
    plan.iterations = iterations;
    plan.c = c;
    plan.n = n;
    plan.c1 = loss.c1;
    plan.c2 = loss.c2;
    plan.private_run = false;
    plan.reason = "noise off";
    return plan;
  }
};

}  // namespace dpsc
