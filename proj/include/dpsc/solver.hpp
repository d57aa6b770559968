#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpsc/accountant.hpp"
#include "dpsc/dataset.hpp"
#include "dpsc/errors.hpp"
#include "dpsc/noise.hpp"
#include "dpsc/objective.hpp"
#include "dpsc/penalty.hpp"
#include "dpsc/rng.hpp"

namespace dpsc {

enum class NoiseMode { per_iteration, once, off };

/// Starting point for the consensus iterates. `penalty_default` resolves to
/// uniform draws on [-0.5, 0.5]^p for l1 and to the all-ones vector for l1/2.
enum class InitMode { penalty_default, uniform, ones };

struct SolverConfig {
  double c = 1.0;               // consensus penalty coefficient
  int outer_iterations = 100;   // K
  int inner_steps = 20;         // M gradient steps per w-update
  double alpha = 0.5;           // inner learning rate
  NoiseMode noise_mode = NoiseMode::per_iteration;
  std::uint64_t seed = 0;
  InitMode init = InitMode::penalty_default;
  double inner_grad_tol = 0.0;  // optional early stop on ||grad||; 0 disables

  void validate() const {
    if (!(c > 0.0)) throw std::invalid_argument("consensus weight c must be > 0");
    if (outer_iterations < 1) throw std::invalid_argument("need at least one iteration");
    if (inner_steps < 1) throw std::invalid_argument("need at least one inner step");
    if (!(alpha > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (!(inner_grad_tol >= 0.0)) throw std::invalid_argument("gradient tolerance must be >= 0");
  }
};

struct TraceRow {
  int iteration;
  double objective;        // regularized objective at the smooth iterate w
  double primal_residual;  // ||z - w||_2
  double dual_step;        // ||v_next - v||_2
  double epsilon_so_far;
};

struct SolveResult {
  Eigen::VectorXd w_final;
  Eigen::VectorXd z_final;
  Eigen::VectorXd v_final;  // scaled dual at exit
  std::vector<TraceRow> trace;
  double epsilon_spent = std::numeric_limits<double>::infinity();
};

/// Iterates above this magnitude abort the solve instead of emitting garbage.
inline constexpr double kDivergenceBound = 1e8;

/// Value of the perturbed w-subproblem
///   (1/n) sum O(y_i w^T x_i) + (c/2)||z_next - w + v/c||^2 + c b^T w.
inline double w_objective_priv(const Eigen::VectorXd& w, const Dataset& data,
                               const Eigen::VectorXd& z_next, const Eigen::VectorXd& v,
                               double c, const Eigen::VectorXd& b) {
  const Eigen::VectorXd margins = (data.features * w).cwiseProduct(data.labels);
  double total = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) total += logistic_loss(margins[i]);
  const Eigen::VectorXd gap = z_next - w + v / c;
  return total / static_cast<double>(data.n()) + 0.5 * c * gap.squaredNorm() +
         c * b.dot(w);
}

/// Gradient of the perturbed w-subproblem:
///   (1/n) sum y_i O'(y_i w^T x_i) x_i - c (z_next - w + v/c) + c b.
inline Eigen::VectorXd w_gradient_priv(const Eigen::VectorXd& w, const Dataset& data,
                                       const Eigen::VectorXd& z_next,
                                       const Eigen::VectorXd& v, double c,
                                       const Eigen::VectorXd& b) {
  const Eigen::VectorXd margins = (data.features * w).cwiseProduct(data.labels);
  Eigen::VectorXd weights(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i)
    weights[i] = data.labels[i] * logistic_loss_derivative(margins[i]);
  Eigen::VectorXd grad = data.features.transpose() * weights /
                         static_cast<double>(data.n());
  grad -= c * (z_next - w + v / c);
  grad += c * b;
  return grad;
}

/// Implicit noise vector recovered from the stationarity of the w-subproblem:
///   b = -(1/cn) sum y_i O'(y_i w^T x_i) x_i + (z_next - w + v/c).
/// Exact when w is an exact inner minimizer.
inline Eigen::VectorXd kkt_noise_estimate(const Eigen::VectorXd& w, const Dataset& data,
                                          const Eigen::VectorXd& z_next,
                                          const Eigen::VectorXd& v, double c) {
  const Eigen::VectorXd margins = (data.features * w).cwiseProduct(data.labels);
  Eigen::VectorXd weights(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i)
    weights[i] = data.labels[i] * logistic_loss_derivative(margins[i]);
  const Eigen::VectorXd data_term = data.features.transpose() * weights /
                                    (c * static_cast<double>(data.n()));
  return -data_term + (z_next - w + v / c);
}

/// M fixed gradient steps on the perturbed subproblem from w = state.w.
/// state.z must already hold the updated consensus iterate z(k+1).
inline Eigen::VectorXd w_update_gd(const AdmmState& state, const Dataset& data,
                                   const SolverConfig& config, const Eigen::VectorXd& b) {
  config.validate();
  if (b.size() != state.w.size())
    throw std::invalid_argument("noise vector length does not match iterate");
  if (state.w.size() != data.p())
    throw std::invalid_argument("iterate length does not match feature columns");
  Eigen::VectorXd w = state.w;
  for (int m = 1; m <= config.inner_steps; ++m) {
    const Eigen::VectorXd grad =
        w_gradient_priv(w, data, state.z, state.v, config.c, b);
    if (config.inner_grad_tol > 0.0 && grad.norm() < config.inner_grad_tol) break;
    w -= config.alpha * grad;
    if (!w.allFinite())
      throw SolverError("inner gradient step produced a non-finite iterate; "
                        "reduce the learning rate", state.k, m);
    if (w.cwiseAbs().maxCoeff() > kDivergenceBound)
      throw SolverError("inner iterate exceeded the divergence bound; "
                        "reduce the learning rate", state.k, m);
  }
  return w;
}

/// Scaled dual ascent: v + c (z_next - w_next).
inline Eigen::VectorXd dual_update(const Eigen::VectorXd& z_next,
                                   const Eigen::VectorXd& w_next,
                                   const Eigen::VectorXd& v, double c) {
  if (z_next.size() != w_next.size() || w_next.size() != v.size())
    throw std::invalid_argument("dual update needs vectors of one length");
  return v + c * (z_next - w_next);
}

namespace detail {

inline void check_plan_matches(const PrivacyPlan& plan, const SolverConfig& config,
                               const Dataset& data, const LossSpec& loss) {
  if (!plan.valid)
    throw AccountantError("privacy plan rejected: " + plan.reason);
  if (config.noise_mode == NoiseMode::off) return;
  if (!plan.private_run)
    throw AccountantError("noise requested but the plan is marked non-private");
  if (plan.iterations != config.outer_iterations)
    throw AccountantError("plan iteration count does not match solver config");
  if (plan.c != config.c)
    throw AccountantError("plan consensus weight does not match solver config");
  if (plan.n != data.n())
    throw AccountantError("plan data size does not match the dataset");
  if (plan.c1 != loss.c1 || plan.c2 != loss.c2)
    throw AccountantError("plan loss bounds do not match the loss");
}

inline InitMode resolve_init(const SolverConfig& config, const PenaltySpec& penalty) {
  if (config.init != InitMode::penalty_default) return config.init;
  return penalty.kind == PenaltyKind::l_half ? InitMode::ones : InitMode::uniform;
}

}  // namespace detail

/// Consensus loop with an exponential-mechanism perturbation of the data
/// touching w-step. The z- and dual updates never see the data, so the
/// spent budget is exactly the plan's.
///
/// Randomness: the init and noise draws come from sub-streams derived from
/// config.seed, so switching the init mode never shifts the noise sequence.
inline SolveResult run_dpsc(const Dataset& data, const LossSpec& loss,
                            const PenaltySpec& penalty, const SolverConfig& config,
                            const PrivacyPlan& plan) {
  config.validate();
  loss.validate();
  penalty.validate();
  detail::check_plan_matches(plan, config, data, loss);

  const Eigen::Index p = data.p();
  RngStream init_stream(derive_seed(config.seed, "init"));
  RngStream noise_stream(derive_seed(config.seed, "noise"));

  AdmmState state;
  state.v = Eigen::VectorXd::Zero(p);
  if (detail::resolve_init(config, penalty) == InitMode::ones) {
    state.z = Eigen::VectorXd::Ones(p);
    state.w = Eigen::VectorXd::Ones(p);
  } else {
    state.z.resize(p);
    state.w.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) state.z[i] = init_stream.uniform(-0.5, 0.5);
    for (Eigen::Index i = 0; i < p; ++i) state.w[i] = init_stream.uniform(-0.5, 0.5);
  }

  NoiseSpec noise_spec;
  noise_spec.dim = p;
  if (config.noise_mode != NoiseMode::off) noise_spec.gamma = plan.gamma;

  Eigen::VectorXd b = zero_noise(p);
  if (config.noise_mode == NoiseMode::once) b = sample_noise(noise_spec, noise_stream);

  const bool is_private = config.noise_mode != NoiseMode::off;
  const double eps_step = is_private ? plan.per_iteration_epsilon
                                     : std::numeric_limits<double>::infinity();

  SolveResult result;
  result.trace.reserve(static_cast<std::size_t>(config.outer_iterations));
  for (int k = 0; k < config.outer_iterations; ++k) {
    state.k = k;
    state.z = z_update(penalty, state.w, state.v, config.c);
    if (config.noise_mode == NoiseMode::per_iteration)
      b = sample_noise(noise_spec, noise_stream);
    const Eigen::VectorXd w_next = w_update_gd(state, data, config, b);
    const Eigen::VectorXd v_next = dual_update(state.z, w_next, state.v, config.c);
    const double dual_step = (v_next - state.v).norm();
    state.w = w_next;
    state.v = v_next;
    state.k = k + 1;
    result.trace.push_back({k + 1, objective_at(state.w, data, loss, penalty),
                            (state.z - state.w).norm(), dual_step,
                            eps_step * static_cast<double>(k + 1)});
  }
  state.validate();
  result.w_final = state.w;
  result.z_final = state.z;
  result.v_final = state.v;
  result.epsilon_spent = is_private ? plan.epsilon
                                    : std::numeric_limits<double>::infinity();
  return result;
}

/// Logistic regression with the l1 penalty (random uniform start).
inline SolveResult run_dpll(const Dataset& data, const SolverConfig& config,
                            const PrivacyPlan& plan, double lambda) {
  return run_dpsc(data, LossSpec::logistic(), PenaltySpec::l1(lambda), config, plan);
}

/// Logistic regression with the l1/2 penalty (all-ones start).
inline SolveResult run_dplh(const Dataset& data, const SolverConfig& config,
                            const PrivacyPlan& plan, const PenaltySpec& penalty) {
  if (penalty.kind != PenaltyKind::l_half)
    throw std::invalid_argument("run_dplh requires an l1/2 penalty");
  return run_dpsc(data, LossSpec::logistic(), penalty, config, plan);
}

/// ||b' - b|| between the implicit noise vectors of a dataset and a neighbor
/// that swaps one record, both evaluated at the same (w, z, v). The caller
/// checks the result against the 2*c1/(c*n) sensitivity bound.
inline double sensitivity_witness(const Dataset& data, Eigen::Index swapped_index,
                                  const Eigen::VectorXd& replacement_x,
                                  double replacement_y, const Eigen::VectorXd& w,
                                  const AdmmState& state, double c) {
  if (swapped_index < 0 || swapped_index >= data.n())
    throw std::invalid_argument("swapped index out of range");
  if (replacement_x.size() != data.p())
    throw std::invalid_argument("replacement feature length mismatch");
  if (replacement_x.norm() > 1.0 + kRowNormSlack)
    throw std::invalid_argument("replacement feature norm exceeds 1");
  if (replacement_y != 1.0 && replacement_y != -1.0)
    throw std::invalid_argument("replacement label must be -1 or +1");
  if (!(c > 0.0)) throw std::invalid_argument("consensus weight c must be > 0");

  const Eigen::VectorXd b = kkt_noise_estimate(w, data, state.z, state.v, c);

  Dataset neighbor = data;
  neighbor.features.row(swapped_index) = replacement_x.transpose();
  neighbor.labels[swapped_index] = replacement_y;
  const Eigen::VectorXd b_prime = kkt_noise_estimate(w, neighbor, state.z, state.v, c);

  return (b_prime - b).norm();
}

}  // namespace dpsc
