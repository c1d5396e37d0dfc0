#include "resadapt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "resadapt/error.hpp"
#include "resadapt/special.hpp"

namespace resadapt::stats {

std::vector<double> mid_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = rank;
    i = j + 1;
  }
  return ranks;
}

KwResult kruskal_wallis(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) {
    throw ValidationError("Kruskal-Wallis needs at least 2 groups, got " +
                          std::to_string(groups.size()));
  }
  std::vector<double> pooled;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) {
      throw ValidationError("Kruskal-Wallis group " + std::to_string(g) + " is empty");
    }
    for (double v : groups[g]) {
      if (std::isnan(v)) throw ValidationError("Kruskal-Wallis input contains NaN");
      pooled.push_back(v);
    }
  }
  const auto ranks = mid_ranks(pooled);
  const double n = static_cast<double>(pooled.size());

  double sum_term = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double r = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) r += ranks[offset + i];
    sum_term += r * r / static_cast<double>(g.size());
    offset += g.size();
  }
  const double h_raw = 12.0 / (n * (n + 1.0)) * sum_term - 3.0 * (n + 1.0);

  // Tie correction 1 - sum(t^3 - t) / (n^3 - n).
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double correction = 1.0 - ties / (n * n * n - n);
  if (!(correction > 0.0)) {
    throw ValidationError("Kruskal-Wallis undefined: all observations are identical");
  }

  KwResult out;
  out.k = static_cast<int>(groups.size());
  out.n = pooled.size();
  out.df = out.k - 1;
  out.h = std::max(0.0, h_raw / correction);
  out.p = special::chi2_sf(out.h, out.df);
  out.eta_squared = out.n > static_cast<std::size_t>(out.k)
                        ? eta_squared(out.h, out.k, out.n)
                        : std::nan("");
  return out;
}

double eta_squared(double h, int k, std::size_t n) {
  if (k < 2) throw ValidationError("eta-squared needs k >= 2");
  if (n <= static_cast<std::size_t>(k)) {
    throw ValidationError("eta-squared needs n > k (n = " + std::to_string(n) +
                          ", k = " + std::to_string(k) + ")");
  }
  return (h - k + 1.0) / (static_cast<double>(n) - k);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson: series lengths differ");
  if (x.size() < 2) throw ValidationError("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("pearson: constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace resadapt::stats
