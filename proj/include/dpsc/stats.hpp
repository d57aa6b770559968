#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dpsc {

/// Neumaier compensated sum; keeps averaged metrics stable under reordering.
inline double compensated_sum(const std::vector<double>& values) {
  double sum = 0.0;
  double compensation = 0.0;
  for (double value : values) {
    const double t = sum + value;
    if (std::abs(sum) >= std::abs(value))
      compensation += (sum - t) + value;
    else
      compensation += (value - t) + sum;
    sum = t;
  }
  return sum + compensation;
}

inline double mean(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty sample");
  return compensated_sum(values) / static_cast<double>(values.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single observation.
inline double sample_sd(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sd of an empty sample");
  if (values.size() == 1) return 0.0;
  const double m = mean(values);
  std::vector<double> squares;
  squares.reserve(values.size());
  for (double value : values) squares.push_back((value - m) * (value - m));
  return std::sqrt(compensated_sum(squares) / static_cast<double>(values.size() - 1));
}

/// One-sided 95% Student t critical values for the paired trend checks.
inline double t_critical_95(std::size_t df) {
  static const double table[] = {0,     6.314, 2.920, 2.353, 2.132, 2.015, 1.943,
                                 1.895, 1.860, 1.833, 1.812, 1.796, 1.782, 1.771,
                                 1.761, 1.753, 1.746, 1.740, 1.734, 1.729, 1.725,
                                 1.721, 1.717, 1.714, 1.711, 1.708, 1.706, 1.703,
                                 1.701, 1.699, 1.697};
  if (df == 0) throw std::invalid_argument("t critical value needs df >= 1");
  if (df <= 30) return table[df];
  if (df <= 40) return 1.684;
  if (df <= 60) return 1.671;
  if (df <= 120) return 1.658;
  return 1.645;
}

/// Guarded one-sided trend check on paired differences: passes unless the
/// sample mean is significantly below `claimed_floor` at the 5% level. Used to
/// assert "non-increasing within Monte-Carlo noise" without demanding strict
/// per-seed inequalities.
inline bool paired_mean_not_below(const std::vector<double>& differences,
                                  double claimed_floor = 0.0) {
  if (differences.size() < 2)
    throw std::invalid_argument("paired trend check needs at least two pairs");
  const double m = mean(differences);
  const double sd = sample_sd(differences);
  const double se = sd / std::sqrt(static_cast<double>(differences.size()));
  if (se == 0.0) return m >= claimed_floor;
  return m >= claimed_floor - t_critical_95(differences.size() - 1) * se;
}

/// Affirmative one-sided test: the paired mean exceeds `floor` significantly
/// at the 5% level. Used where a trend must be demonstrated, not merely not
/// contradicted.
inline bool paired_mean_significantly_above(const std::vector<double>& differences,
                                            double floor = 0.0) {
  if (differences.size() < 2)
    throw std::invalid_argument("paired trend check needs at least two pairs");
  const double m = mean(differences);
  const double sd = sample_sd(differences);
  const double se = sd / std::sqrt(static_cast<double>(differences.size()));
  if (se == 0.0) return m > floor;
  return m > floor + t_critical_95(differences.size() - 1) * se;
}

}  // namespace dpsc
