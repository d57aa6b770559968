#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

#include "dpsc/rng.hpp"

namespace dpsc {

/// Parameters of the perturbation vector b with density proportional to
/// exp(-gamma * ||b||_2): larger gamma means smaller noise and more leakage.
struct NoiseSpec {
  double gamma = 1.0;
  Eigen::Index dim = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(gamma > 0.0)) throw std::invalid_argument("noise parameter gamma must be > 0");
    if (dim < 1) throw std::invalid_argument("noise dimension must be >= 1");
  }
};

/// Draw b = r * u with r ~ Gamma(shape = dim, scale = 1/gamma) and u uniform
/// on the unit sphere (a standard-normal vector scaled to unit length).
inline Eigen::VectorXd sample_noise(const NoiseSpec& spec, RngStream& stream) {
  spec.validate();
  Eigen::VectorXd direction(spec.dim);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < spec.dim; ++i) direction[i] = stream.normal();
    norm = direction.norm();
  } while (!(norm > 0.0));
  const double radius = stream.gamma(static_cast<double>(spec.dim), 1.0 / spec.gamma);
  return direction * (radius / norm);
}

/// Convenience overload owning its stream; same seed, same vector.
inline Eigen::VectorXd sample_noise(const NoiseSpec& spec) {
  RngStream stream(spec.seed);
  return sample_noise(spec, stream);
}

/// Zero perturbation; routes non-private runs through the same solver path.
inline Eigen::VectorXd zero_noise(Eigen::Index dim) {
  if (dim < 1) throw std::invalid_argument("noise dimension must be >= 1");
  return Eigen::VectorXd::Zero(dim);
}

}  // namespace dpsc
