#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include "resadapt/error.hpp"
#include "resadapt/special.hpp"
#include "resadapt/stats.hpp"

using namespace resadapt;
using HighPrecision = boost::multiprecision::cpp_dec_float_50;

namespace {

double oracle_chi2_sf(double x, double df) {
  return static_cast<double>(
      boost::math::gamma_q(HighPrecision(df) / 2, HighPrecision(x) / 2));
}

double oracle_t_sf(double t, double df) {
  boost::math::students_t_distribution<HighPrecision> dist{HighPrecision(df)};
  return static_cast<double>(cdf(complement(dist, HighPrecision(t))));
}

// Textbook H with average ranks and tie correction, written independently.
double brute_h(const std::vector<std::vector<double>>& groups) {
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  const double n = static_cast<double>(all.size());
  const auto rank_of = [&](double v) {
    double below = 0, equal = 0;
    for (double x : all) {
      if (x < v) below += 1;
      if (x == v) equal += 1;
    }
    return below + (equal + 1) / 2;
  };
  double s = 0;
  for (const auto& g : groups) {
    double r = 0;
    for (double v : g) r += rank_of(v);
    s += r * r / static_cast<double>(g.size());
  }
  double h = 12.0 / (n * (n + 1)) * s - 3 * (n + 1);
  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  return h / (1 - ties / (n * n * n - n));
}

}  // namespace

TEST(Special, Chi2SfMatchesHighPrecisionGrid) {
  const double dfs[] = {1, 2, 3, 4, 11};
  const double xs[] = {0.5, 3.0, 14.139, 19.817};
  for (double df : dfs) {
    for (double x : xs) {
      EXPECT_NEAR(special::chi2_sf(x, df), oracle_chi2_sf(x, df), 1e-10) << df << " " << x;
    }
  }
}

TEST(Special, Chi2SfEdges) {
  EXPECT_EQ(special::chi2_sf(0.0, 3.0), 1.0);
  EXPECT_NEAR(special::chi2_sf(200.0, 2.0), std::exp(-100.0), 1e-50);
  EXPECT_THROW(special::chi2_sf(1.0, 0.0), ValidationError);
  EXPECT_THROW(special::chi2_sf(-1.0, 2.0), ValidationError);
}

TEST(Special, GammaPQComplement) {
  for (double a : {0.5, 1.0, 2.5, 10.0}) {
    for (double x : {0.1, 1.0, 5.0, 20.0}) {
      EXPECT_NEAR(special::gamma_p(a, x) + special::gamma_q(a, x), 1.0, 1e-14);
      EXPECT_NEAR(special::gamma_p(a, x),
                  static_cast<double>(boost::math::gamma_p(HighPrecision(a), HighPrecision(x))),
                  1e-12);
    }
  }
}

TEST(Special, IncompleteBeta) {
  for (double a : {0.5, 2.0, 7.5}) {
    for (double b : {0.5, 3.0}) {
      for (double x : {0.0, 0.05, 0.5, 0.93, 1.0}) {
        const double want = static_cast<double>(
            boost::math::ibeta(HighPrecision(a), HighPrecision(b), HighPrecision(x)));
        EXPECT_NEAR(special::beta_i(a, b, x), want, 1e-12) << a << " " << b << " " << x;
      }
    }
  }
}

TEST(Special, StudentT) {
  for (double df : {1.0, 5.0, 30.0, 252.0}) {
    for (double t : {-3.0, -0.4, 0.0, 1.2, 2.5, 8.0}) {
      EXPECT_NEAR(special::t_sf(t, df), oracle_t_sf(t, df), 1e-10);
    }
    EXPECT_NEAR(special::t_two_sided_p(2.0, df), 2 * oracle_t_sf(2.0, df), 1e-10);
  }
  EXPECT_EQ(special::t_two_sided_p(0.0, 4.0), 1.0);
}

TEST(KruskalWallis, TwoByTwo) {
  const std::vector<std::vector<double>> g = {{1, 2}, {3, 4}};
  const auto r = stats::kruskal_wallis(g);
  EXPECT_NEAR(r.h, 2.4, 1e-12);
  EXPECT_EQ(r.df, 1);
  EXPECT_EQ(r.k, 2);
  EXPECT_EQ(r.n, 4u);
  EXPECT_NEAR(r.p, oracle_chi2_sf(2.4, 1), 1e-12);
}

TEST(KruskalWallis, TieCorrectionByHand) {
  // Ranks 1, 3, 3 | 3, 5: H0 = 0.4 * (49/3 + 32) - 18 = 4/3; C = 1 - 24/120.
  const std::vector<std::vector<double>> g = {{1, 2, 2}, {2, 3}};
  EXPECT_NEAR(stats::kruskal_wallis(g).h, (4.0 / 3.0) / 0.8, 1e-12);
}

TEST(KruskalWallis, MatchesBruteForceAndMonotoneInvariance) {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> k_dist(2, 5), n_dist(1, 8), v_dist(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> g(static_cast<std::size_t>(k_dist(rng)));
    for (auto& grp : g) {
      grp.resize(static_cast<std::size_t>(n_dist(rng)));
      for (auto& v : grp) v = v_dist(rng);
    }
    g[0].push_back(-1.0);  // never all-identical
    const auto base = stats::kruskal_wallis(g);
    EXPECT_NEAR(base.h, brute_h(g), 1e-9);
    auto t = g;
    for (auto& grp : t) {
      for (auto& v : grp) v = std::exp(v) * 3.0 + 7.0;
    }
    EXPECT_NEAR(stats::kruskal_wallis(t).h, base.h, 1e-9 * std::max(1.0, base.h));
    std::reverse(t.begin(), t.end());
    EXPECT_NEAR(stats::kruskal_wallis(t).h, base.h, 1e-9 * std::max(1.0, base.h));
  }
}

TEST(KruskalWallis, Errors) {
  EXPECT_THROW(stats::kruskal_wallis(std::vector<std::vector<double>>{{1, 2}}), ValidationError);
  EXPECT_THROW(stats::kruskal_wallis(std::vector<std::vector<double>>{{1}, {}}), ValidationError);
  EXPECT_THROW(stats::kruskal_wallis(std::vector<std::vector<double>>{{3, 3}, {3}}),
               ValidationError);
  EXPECT_THROW(stats::kruskal_wallis(std::vector<std::vector<double>>{{NAN}, {1}}),
               ValidationError);
}

TEST(EtaSquared, Formula) {
  EXPECT_DOUBLE_EQ(stats::eta_squared(14.139, 4, 264), (14.139 - 4 + 1) / (264 - 4));
  EXPECT_NEAR(stats::eta_squared(14.139, 4, 264), 0.0428, 5e-5);
  EXPECT_NEAR(stats::eta_squared(19.817, 3, 276), 0.0653, 5e-5);
  EXPECT_NEAR(stats::eta_squared(65.328, 12, 264), 0.2156, 5e-5);
  EXPECT_NEAR(stats::eta_squared(79.045, 12, 276), 0.2577, 5e-5);
  EXPECT_THROW(stats::eta_squared(1.0, 1, 10), ValidationError);
  EXPECT_THROW(stats::eta_squared(1.0, 4, 4), ValidationError);
}

TEST(Pearson, AgainstDirectFormula) {
  std::mt19937 rng(2);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(20), y(20);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = d(rng);
      y[i] = 0.5 * x[i] + d(rng);
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / 20;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / 20;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    const double r = stats::pearson(x, y);
    EXPECT_NEAR(r, sxy / std::sqrt(sxx * syy), 1e-12);
    EXPECT_LE(std::fabs(r), 1.0);
  }
  const std::vector<double> a = {1, 2, 3}, b = {2, 4, 6}, c = {1, 1, 1};
  EXPECT_DOUBLE_EQ(stats::pearson(a, b), 1.0);
  EXPECT_THROW(stats::pearson(a, c), ValidationError);
}

TEST(MidRanks, Ties) {
  const std::vector<double> v = {10, 20, 10, 30, 20, 20};
  EXPECT_EQ(stats::mid_ranks(v), (std::vector<double>{1.5, 4, 1.5, 6, 4, 4}));
}

TEST(Special, ReportedKruskalWallisPValue) {
  // H(3) = 14.139 sits just under the 0.003 bound.
  EXPECT_NEAR(special::chi2_sf(14.139, 3.0), 0.00272, 5e-6);
  EXPECT_LT(special::chi2_sf(14.139, 3.0), 0.003);
  for (double df : {1.0, 2.0, 7.0}) EXPECT_EQ(special::chi2_sf(0.0, df), 1.0);
  for (double df : {1.0, 9.0, 100.0}) EXPECT_EQ(special::t_sf(0.0, df), 0.5);
}

TEST(KruskalWallis, MirroredGroupsGiveZero) {
  const std::vector<std::vector<double>> g = {{1, 3}, {3, 1}};
  EXPECT_NEAR(stats::kruskal_wallis(g).h, 0.0, 1e-12);
}

TEST(EtaSquared, VanishesAtExpectedH) {
  for (int k : {2, 4, 12}) {
    for (std::size_t n : {std::size_t(13), std::size_t(264)}) {
      EXPECT_EQ(stats::eta_squared(k - 1.0, k, n), 0.0);
    }
  }
}

TEST(Pearson, PerfectLines) {
  std::vector<double> x, up, down;
  for (int i = 1; i <= 10; ++i) {
    x.push_back(i);
    up.push_back(2.0 * i + 1);
    down.push_back(-i);
  }
  EXPECT_NEAR(stats::pearson(x, up), 1.0, 1e-15);
  EXPECT_NEAR(stats::pearson(x, down), -1.0, 1e-15);
}
