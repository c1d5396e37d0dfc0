#pragma once

// Rank statistics, correlation and effect sizes.

#include <cstddef>
#include <span>
#include <vector>

namespace resadapt::stats {

struct KwResult {
  double h = 0.0;  // tie-corrected statistic
  int df = 0;      // k - 1
  double p = 1.0;  // chi-square upper tail
  double eta_squared = 0.0;
  int k = 0;
  std::size_t n = 0;
};

/// Kruskal-Wallis H test with mid-ranks and the standard tie correction.
/// Throws ValidationError with fewer than two groups, an empty group, or when
/// every observation is identical (the tie correction vanishes).
KwResult kruskal_wallis(std::span<const std::vector<double>> groups);

/// Effect size (H - k + 1) / (n - k). Throws ValidationError unless n > k >= 2.
double eta_squared(double h, int k, std::size_t n);

/// Sample (Pearson) correlation. Throws ValidationError on length mismatch,
/// fewer than two points, or a constant series.
double pearson(std::span<const double> x, std::span<const double> y);

/// Mid-ranks (1-based) of the pooled values.
std::vector<double> mid_ranks(std::span<const double> values);

}  // namespace resadapt::stats
