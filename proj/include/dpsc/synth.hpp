#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dpsc/dataset.hpp"
#include "dpsc/rng.hpp"

namespace dpsc {

/// Synthetic design: rows x_i ~ N(0, Sigma) with Sigma_jk = rho^|j-k|, labels
/// from the logistic model of a fixed sparse coefficient vector. The default
/// coefficient pattern is (10, 9, 8, 7, 6, 5, 4, 0.5, 0, ..., 0), which is why
/// p must be at least 9.
struct SynthSpec {
  long n = 11000;
  long p = 100;
  double rho = 0.5;
  Eigen::VectorXd true_w;  // empty selects the default pattern
  std::uint64_t seed = 0;
  bool stochastic_labels = false;  // draw y ~ Bernoulli(sigmoid(w^T x)) instead
                                   // of thresholding at 1/2

  static Eigen::VectorXd default_true_w(long p) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    const double head[8] = {10.0, 9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 0.5};
    for (int i = 0; i < 8; ++i) w[i] = head[i];
    return w;
  }

  Eigen::VectorXd resolved_true_w() const {
    if (true_w.size() == 0) return default_true_w(p);
    if (true_w.size() != p)
      throw std::invalid_argument("true coefficient vector length must equal p");
    return true_w;
  }

  void validate() const {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (p < 9) throw std::invalid_argument("p must be >= 9 so the true support fits");
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
    resolved_true_w();
  }
};

struct SynthResult {
  Dataset data;
  Eigen::VectorXd true_w;
};

/// Lower Cholesky factor of the banded correlation matrix rho^|j-k|.
inline Eigen::MatrixXd ar1_cholesky(long p, double rho) {
  Eigen::MatrixXd sigma(p, p);
  for (long j = 0; j < p; ++j)
    for (long k = 0; k < p; ++k) sigma(j, k) = std::pow(rho, std::abs(j - k));
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("correlation matrix is not positive definite");
  return llt.matrixL();
}

/// Raw design rows x_i ~ N(0, Sigma), before any labeling or norm capping.
inline Eigen::MatrixXd draw_gaussian_design(long n, long p, double rho,
                                            RngStream& stream) {
  const Eigen::MatrixXd chol = ar1_cholesky(p, rho);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd z(p);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < p; ++j) z[j] = stream.normal();
    x.row(i) = (chol * z).transpose();
  }
  return x;
}

/// Draw the design through the Cholesky factor of the banded correlation
/// matrix, label each row from the raw (uncapped) features, then rescale any
/// row with norm > 1 down to the unit sphere. Capping divides a whole row by
/// a positive scalar, so it never flips the sign of w^T x or the label.
inline SynthResult synth_generate(const SynthSpec& spec) {
  spec.validate();
  const Eigen::VectorXd w = spec.resolved_true_w();

  RngStream stream(spec.seed);
  Eigen::MatrixXd x = draw_gaussian_design(spec.n, spec.p, spec.rho, stream);
  Eigen::VectorXd y(spec.n);
  for (long i = 0; i < spec.n; ++i) {
    const double margin = w.dot(x.row(i));
    if (spec.stochastic_labels) {
      const double prob = 1.0 / (1.0 + std::exp(-margin));
      y[i] = stream.uniform() < prob ? 1.0 : -1.0;
    } else {
      y[i] = margin >= 0.0 ? 1.0 : -1.0;
    }
    const double norm = x.row(i).norm();
    if (norm > 1.0) x.row(i) /= norm;
  }
  return {Dataset(std::move(x), std::move(y)), w};
}

/// Deterministic shuffled split into (train, test) of sizes (n - test_n, test_n).
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& data, long test_n,
                                                    std::uint64_t seed) {
  const long n = data.n();
  if (test_n < 1 || test_n >= n)
    throw std::invalid_argument("test size must satisfy 1 <= test_n < n");

  std::vector<long> order(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  RngStream stream(seed);
  for (long i = n - 1; i > 0; --i) {
    const long j = static_cast<long>(stream.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  const long train_n = n - test_n;
  Eigen::MatrixXd train_x(train_n, data.p());
  Eigen::VectorXd train_y(train_n);
  Eigen::MatrixXd test_x(test_n, data.p());
  Eigen::VectorXd test_y(test_n);
  for (long i = 0; i < train_n; ++i) {
    train_x.row(i) = data.features.row(order[static_cast<std::size_t>(i)]);
    train_y[i] = data.labels[order[static_cast<std::size_t>(i)]];
  }
  for (long i = 0; i < test_n; ++i) {
    test_x.row(i) = data.features.row(order[static_cast<std::size_t>(train_n + i)]);
    test_y[i] = data.labels[order[static_cast<std::size_t>(train_n + i)]];
  }
  return {Dataset(std::move(train_x), std::move(train_y)),
          Dataset(std::move(test_x), std::move(test_y))};
}

}  // namespace dpsc
