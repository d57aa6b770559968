#pragma once

// Small dataset builders shared by the test suites.

#include <Eigen/Dense>
#include <cstdint>

#include "dpsc/dataset.hpp"
#include "dpsc/rng.hpp"

namespace builders {

/// Random rows with norm <= 1 and random labels; no signal.
inline dpsc::Dataset random_dataset(long n, long p, std::uint64_t seed) {
  dpsc::RngStream stream(seed);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) {
    Eigen::VectorXd row(p);
    for (long j = 0; j < p; ++j) row[j] = stream.normal();
    row *= stream.uniform() / std::max(row.norm(), 1e-12);
    x.row(i) = row.transpose();
    y[i] = stream.uniform() < 0.5 ? -1.0 : 1.0;
  }
  return dpsc::Dataset(std::move(x), std::move(y));
}

/// Rows with norm <= 1 labeled by sign(w^T x); flip_fraction > 0 makes the
/// problem non-separable so the unregularized logistic fit exists.
inline dpsc::Dataset logistic_dataset(long n, long p, const Eigen::VectorXd& w,
                                      std::uint64_t seed, double flip_fraction = 0.0) {
  dpsc::RngStream stream(seed);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) {
    Eigen::VectorXd row(p);
    for (long j = 0; j < p; ++j) row[j] = stream.normal();
    const double norm = row.norm();
    if (norm > 1.0) row /= norm;
    x.row(i) = row.transpose();
    y[i] = w.dot(row) >= 0.0 ? 1.0 : -1.0;
    if (flip_fraction > 0.0 && stream.uniform() < flip_fraction) y[i] = -y[i];
  }
  return dpsc::Dataset(std::move(x), std::move(y));
}

inline Eigen::VectorXd random_vector(long p, std::uint64_t seed, double scale = 1.0) {
  dpsc::RngStream stream(seed);
  Eigen::VectorXd v(p);
  for (long j = 0; j < p; ++j) v[j] = scale * stream.normal();
  return v;
}

}  // namespace builders
