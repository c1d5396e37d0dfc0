#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace resadapt {

/// Pairwise (cascade) summation. The result depends only on the element
/// order, never on how work was split across threads.
inline double pairwise_sum(std::span<const double> xs) {
  constexpr std::size_t kBlock = 32;
  if (xs.size() <= kBlock) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double mean(std::span<const double> xs) {
  return xs.empty() ? 0.0 : pairwise_sum(xs) / static_cast<double>(xs.size());
}

/// Two-pass population variance (divide by N).
inline double population_variance(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double mu = mean(xs);
  double acc = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double d = x - mu;
    acc += d * d;
    comp += d;
  }
  const double n = static_cast<double>(xs.size());
  // Corrected two-pass: removes the rounding error left in mu.
  return (acc - comp * comp / n) / n;
}

inline double population_stddev(std::span<const double> xs) {
  const double v = population_variance(xs);
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

}  // namespace resadapt
