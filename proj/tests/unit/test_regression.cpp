#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "resadapt/design.hpp"
#include "resadapt/error.hpp"
#include "resadapt/regression.hpp"

using namespace resadapt;
using namespace resadapt::stats;

namespace {

struct Grouped {
  DesignMatrix x;
  std::vector<double> y;
  std::vector<std::string> groups;
};

// Intercept plus one covariate, y = 3 + 0.5 x + a_g + e.
Grouped planted(std::size_t n_groups, std::size_t per_group, double var_a, double var_e,
                unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Grouped g;
  std::vector<double> values;
  for (std::size_t j = 0; j < n_groups; ++j) {
    const double a = std::sqrt(var_a) * z(rng);
    for (std::size_t i = 0; i < per_group; ++i) {
      const double xv = z(rng);
      values.push_back(1.0);
      values.push_back(xv);
      g.y.push_back(3.0 + 0.5 * xv + a + std::sqrt(var_e) * z(rng));
      g.groups.push_back("g" + std::to_string(j));
    }
  }
  g.x = DesignMatrix::from_columns({"(Intercept)", "x"}, g.y.size(), std::move(values));
  return g;
}

}  // namespace

TEST(Formula, StarExpandsAndSortsByOrder) {
  const auto f = Formula::parse("y ~ a*b + c");
  EXPECT_EQ(f.response, "y");
  const std::vector<std::vector<std::string>> want = {{"a"}, {"b"}, {"c"}, {"a", "b"}};
  EXPECT_EQ(f.terms, want);
  EXPECT_EQ(f.to_string(), "y ~ 1 + a + b + c + a:b");
}

TEST(Formula, DuplicatesCollapse) {
  const auto f = Formula::parse("y ~ a + a + b:a + a*b");
  EXPECT_EQ(f.terms.size(), 3u);
}

TEST(Formula, Malformed) {
  EXPECT_THROW(Formula::parse("y a + b"), ValidationError);
  EXPECT_THROW(Formula::parse(" ~ a"), ValidationError);
  EXPECT_THROW(Formula::parse("y ~ a + + b"), ValidationError);
  EXPECT_THROW(Formula::parse("y ~ a:a"), ValidationError);
}

TEST(Design, DummyNamesAndReference) {
  VariableTable t(6);
  t.add_numeric("y", {1, 2, 3, 4, 5, 7});
  t.add_numeric("si", {10, 20, 30, 15, 25, 40});
  t.add_categorical("act", {"still", "walking", "running", "still", "walking", "running"},
                    {"still", "walking", "running", "in_vehicle"});
  const auto md = build_design(t, Formula::parse("y ~ act*si"), {{{"act", "running"}}});
  const std::vector<std::string> names = {"(Intercept)", "still", "walking", "si",
                                          "still:si", "walking:si"};
  EXPECT_EQ(md.x.column_names(), names);
  EXPECT_EQ(md.x.reference_levels().at("act"), "running");
  // Row 1 is walking with si = 20.
  const std::vector<double> row1 = {1, 0, 1, 20, 0, 20};
  const auto r = md.x.row(1);
  EXPECT_EQ(std::vector<double>(r.begin(), r.end()), row1);
}

TEST(Design, UnusedLevelsAreDroppedAndDefaultReferenceIsFirstObserved) {
  VariableTable t(4);
  t.add_numeric("y", {1, 2, 3, 4});
  t.add_categorical("g", {"b", "c", "b", "c"}, {"a", "b", "c"});
  const auto md = build_design(t, Formula::parse("y ~ g"));
  EXPECT_EQ(md.x.reference_levels().at("g"), "b");
  EXPECT_EQ(md.x.column_names(), (std::vector<std::string>{"(Intercept)", "c"}));
}

TEST(Design, Errors) {
  VariableTable t(4);
  t.add_numeric("y", {1, 2, 3, 4});
  t.add_numeric("x", {1, 2, 3, 4});
  t.add_numeric("x2", {2, 4, 6, 8});
  t.add_numeric("k", {5, 5, 5, 5});
  t.add_categorical("g", {"a", "a", "a", "a"}, {"a", "b"});
  EXPECT_THROW(build_design(t, Formula::parse("y ~ x:k")), ValidationError);
  EXPECT_THROW(build_design(t, Formula::parse("y ~ nope")), ValidationError);
  EXPECT_THROW(build_design(t, Formula::parse("y ~ g")), ValidationError);
  EXPECT_THROW(build_design(t, Formula::parse("y ~ x"), {{{"x", "a"}}}), ValidationError);
  try {
    build_design(t, Formula::parse("y ~ k"));
    FAIL() << "constant column accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("k"), std::string::npos);
  }
  try {
    build_design(t, Formula::parse("y ~ x + x2"));
    FAIL() << "collinear columns accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("linearly dependent"), std::string::npos);
  }
}

TEST(Design, EncodeRejectsUnseenLevel) {
  VariableTable t(4);
  t.add_numeric("y", {1, 2, 3, 4});
  t.add_categorical("g", {"a", "b", "a", "b"}, {"a", "b", "c"});
  const auto md = build_design(t, Formula::parse("y ~ g"));
  VariableTable fresh(1);
  fresh.add_numeric("y", {0});
  fresh.add_categorical("g", {"c"}, {"a", "b", "c"});
  EXPECT_THROW(md.x.encode(fresh), ValidationError);
}

TEST(Ols, RecoversNoiselessCoefficients) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5, 5);
  const std::size_t n = 30;
  std::vector<double> v, y;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = u(rng), b = u(rng);
    v.insert(v.end(), {1.0, a, b});
    y.push_back(2.0 + 3.0 * a - 1.5 * b);
  }
  const auto x = DesignMatrix::from_columns({"(Intercept)", "a", "b"}, n, v);
  const auto fit = ols_fit(x, y);
  EXPECT_NEAR(fit.coefficient("(Intercept)").estimate, 2.0, 1e-10);
  EXPECT_NEAR(fit.coefficient("a").estimate, 3.0, 1e-10);
  EXPECT_NEAR(fit.coefficient("b").estimate, -1.5, 1e-10);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_EQ(fit.df_residual, n - 3);
  EXPECT_THROW(fit.coefficient("c"), ValidationError);
}

TEST(Ols, SimpleRegressionClosedForm) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  const std::size_t n = 40;
  std::vector<double> xs(n), ys(n), v;
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = z(rng);
    ys[i] = 1.0 + 0.7 * xs[i] + z(rng);
    v.insert(v.end(), {1.0, xs[i]});
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += xs[i] / n, my += ys[i] / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double b1 = sxy / sxx, b0 = my - b1 * mx;
  const double rss = syy - b1 * sxy;
  const double s2 = rss / (n - 2);
  const auto fit = ols_fit(DesignMatrix::from_columns({"(Intercept)", "x"}, n, v), ys);
  EXPECT_NEAR(fit.coefficient("x").estimate, b1, 1e-12);
  EXPECT_NEAR(fit.coefficient("(Intercept)").estimate, b0, 1e-12);
  EXPECT_NEAR(fit.coefficient("x").std_error, std::sqrt(s2 / sxx), 1e-12);
  EXPECT_NEAR(fit.r_squared, 1 - rss / syy, 1e-12);
  EXPECT_NEAR(fit.adj_r_squared, 1 - (1 - fit.r_squared) * (n - 1) / (n - 2.0), 1e-12);
  double resid_sum = 0;
  for (double r : fit.residuals) resid_sum += r;
  EXPECT_NEAR(resid_sum, 0.0, 1e-10);
}

TEST(Ols, NeedsMoreRowsThanColumns) {
  const auto x = DesignMatrix::from_columns({"(Intercept)", "x"}, 2, {1, 0, 1, 1});
  const std::vector<double> y = {1, 2};
  EXPECT_THROW(ols_fit(x, y), ValidationError);
}

TEST(Lmm, RecoversPlantedVarianceComponents) {
  const auto g = planted(50, 40, 4.0, 1.0, 2024);
  const auto fit = lmm_fit(g.x, g.y, g.groups);
  EXPECT_NEAR(fit.var_group, 4.0, 0.8);
  EXPECT_NEAR(fit.var_residual, 1.0, 0.2);
  EXPECT_NEAR(fit.coefficient("x").estimate, 0.5, 0.05);
  EXPECT_FALSE(fit.boundary);
  EXPECT_EQ(fit.n_groups, 50u);
  EXPECT_GT(fit.icc, 0.7);
  EXPECT_LE(fit.r2_marginal, fit.r2_conditional);
}

TEST(Lmm, NoGroupEffectGivesSmallIcc) {
  const auto g = planted(30, 20, 0.0, 1.0, 99);
  const auto fit = lmm_fit(g.x, g.y, g.groups);
  EXPECT_LT(fit.icc, 0.02);
}

TEST(Lmm, BalancedOneWayMatchesAnovaEstimators) {
  // Intercept-only, balanced: REML equals the ANOVA moment estimators when positive.
  const auto g = planted(12, 8, 2.0, 1.0, 5);
  const std::size_t k = 12, m = 8, n = k * m;
  const auto x = DesignMatrix::from_columns({"(Intercept)"}, n, std::vector<double>(n, 1.0));
  std::vector<double> means(k, 0.0);
  double grand = 0;
  for (std::size_t r = 0; r < n; ++r) means[r / m] += g.y[r] / m, grand += g.y[r] / n;
  double ssb = 0, ssw = 0;
  for (std::size_t r = 0; r < n; ++r) ssw += (g.y[r] - means[r / m]) * (g.y[r] - means[r / m]);
  for (double mu : means) ssb += m * (mu - grand) * (mu - grand);
  const double msw = ssw / (n - k), msb = ssb / (k - 1);
  ASSERT_GT(msb, msw);
  const auto fit = lmm_fit(x, g.y, g.groups);
  EXPECT_NEAR(fit.var_group, (msb - msw) / m, 1e-6);
  EXPECT_NEAR(fit.var_residual, msw, 1e-6);
}

TEST(Lmm, ZeroLambdaEqualsOls) {
  const auto g = planted(10, 6, 1.0, 1.0, 11);
  LmmOptions opt;
  opt.fixed_lambda = 0.0;
  const auto lmm = lmm_fit(g.x, g.y, g.groups, opt);
  const auto ols = ols_fit(g.x, g.y);
  for (std::size_t c = 0; c < ols.coefficients.size(); ++c) {
    EXPECT_EQ(lmm.fixed[c].estimate, ols.coefficients[c].estimate);
  }
  EXPECT_EQ(lmm.var_group, 0.0);
  EXPECT_TRUE(lmm.boundary);
  EXPECT_DOUBLE_EQ(lmm.var_residual, ols.residual_se * ols.residual_se);
}

TEST(Lmm, OptimumIsALocalMinimumOfTheDeviance) {
  const auto g = planted(20, 10, 1.5, 1.0, 3);
  const auto fit = lmm_fit(g.x, g.y, g.groups);
  const double at = reml_deviance(g.x, g.y, g.groups, fit.lambda);
  EXPECT_NEAR(-0.5 * at, fit.reml_loglik, 1e-9);
  EXPECT_LE(at, reml_deviance(g.x, g.y, g.groups, fit.lambda * 1.05) + 1e-9);
  EXPECT_LE(at, reml_deviance(g.x, g.y, g.groups, fit.lambda / 1.05) + 1e-9);
}

TEST(Lmm, UnboundedGroupVarianceIsAConvergenceError) {
  // Groups differ by large constants with almost no within-group noise.
  std::vector<double> y, v;
  std::vector<std::string> groups;
  for (int j = 0; j < 6; ++j) {
    for (int i = 0; i < 5; ++i) {
      y.push_back(1000.0 * j + 1e-9 * i);
      v.push_back(1.0);
      groups.push_back("g" + std::to_string(j));
    }
  }
  const auto x = DesignMatrix::from_columns({"(Intercept)"}, y.size(), v);
  EXPECT_THROW(lmm_fit(x, y, groups), ConvergenceError);
}

TEST(Lmm, InputValidation) {
  const auto g = planted(3, 4, 1.0, 1.0, 1);
  std::vector<std::string> one(g.y.size(), "only");
  EXPECT_THROW(lmm_fit(g.x, g.y, one), ValidationError);
  std::vector<std::string> short_groups(g.groups.begin(), g.groups.end() - 1);
  EXPECT_THROW(lmm_fit(g.x, g.y, short_groups), ValidationError);
  LmmOptions bad;
  bad.fixed_lambda = -1.0;
  EXPECT_THROW(lmm_fit(g.x, g.y, g.groups, bad), ValidationError);
}

TEST(Design, SixRowFixtureMatchesHandExpansion) {
  VariableTable t(6);
  t.add_numeric("y", {1, 2, 3, 4, 5, 6});
  t.add_numeric("si", {10, 20, 30, 40, 50, 60});
  t.add_categorical("act", {"still", "walking", "running", "walking", "still", "running"},
                    {"still", "walking", "running"});
  const auto md = build_design(t, Formula::parse("y ~ act*si"), {{{"act", "still"}}});
  EXPECT_EQ(md.x.column_names(), (std::vector<std::string>{"(Intercept)", "walking", "running",
                                                           "si", "walking:si", "running:si"}));
  // Row-major, written out by hand.
  const std::vector<double> want = {
      1, 0, 0, 10, 0,  0,   //
      1, 1, 0, 20, 20, 0,   //
      1, 0, 1, 30, 0,  30,  //
      1, 1, 0, 40, 40, 0,   //
      1, 0, 0, 50, 0,  0,   //
      1, 0, 1, 60, 0,  60,
  };
  EXPECT_EQ(md.x.values(), want);
}

TEST(Ols, ConstantResponseHasNoSlopeAndNoFit) {
  const auto x = DesignMatrix::from_columns({"(Intercept)", "x"}, 5,
                                            {1, 1, 1, 2, 1, 3, 1, 4, 1, 5});
  const std::vector<double> y(5, 7.0);
  const auto fit = ols_fit(x, y);
  EXPECT_NEAR(fit.coefficient("x").estimate, 0.0, 1e-12);
  EXPECT_NEAR(fit.coefficient("(Intercept)").estimate, 7.0, 1e-12);
  EXPECT_EQ(fit.r_squared, 0.0);
}

TEST(PseudoR2, InterceptOnlyHasNoMarginalShare) {
  const auto g = planted(15, 10, 2.0, 1.0, 21);
  const std::size_t n = g.y.size();
  const auto x = DesignMatrix::from_columns({"(Intercept)"}, n, std::vector<double>(n, 1.0));
  const auto fit = lmm_fit(x, g.y, g.groups);
  const auto r2 = pseudo_r2(fit, x);
  EXPECT_EQ(r2.marginal, 0.0);
  EXPECT_NEAR(r2.conditional, fit.var_group / (fit.var_group + fit.var_residual), 1e-12);
}

TEST(PseudoR2, NoGroupVarianceMakesBothEqual) {
  const auto g = planted(10, 6, 1.0, 1.0, 11);
  LmmOptions opt;
  opt.fixed_lambda = 0.0;
  const auto fit = lmm_fit(g.x, g.y, g.groups, opt);
  const auto r2 = pseudo_r2(fit, g.x);
  EXPECT_GT(r2.marginal, 0.0);
  EXPECT_EQ(r2.marginal, r2.conditional);
}
