#pragma once

// Ordinary least squares and the random-intercept linear mixed model.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resadapt/design.hpp"

namespace resadapt::stats {

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_value = 0.0;
  double p_value = 1.0;  // two-sided, Student t
};

struct OlsFit {
  std::vector<Coefficient> coefficients;
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  double residual_se = 0.0;
  std::size_t n = 0;
  std::size_t df_residual = 0;
  std::vector<double> fitted;
  std::vector<double> residuals;

  const Coefficient& coefficient(std::string_view name) const;
};

/// Throws ValidationError when n <= #columns or the design is rank deficient.
OlsFit ols_fit(const DesignMatrix& x, std::span<const double> y);

struct LmmOptions {
  /// Fix the variance ratio sigma2_group / sigma2_residual instead of
  /// estimating it.
  std::optional<double> fixed_lambda;
  /// Search bracket for log(lambda) and its grid resolution.
  double log_lambda_min = -20.0;
  double log_lambda_max = 12.0;
  int grid_points = 161;
  /// Golden-section stopping width on log(lambda).
  double tolerance = 1e-8;
};

struct LmmFit {
  std::vector<Coefficient> fixed;
  double var_group = 0.0;
  double var_residual = 0.0;
  double lambda = 0.0;
  double reml_loglik = 0.0;
  /// Maximum-likelihood log-likelihood evaluated at the REML estimates.
  double ml_loglik = 0.0;
  /// 2p - 2 ml_loglik and p ln(n) - 2 ml_loglik with p = #fixed + 2.
  double aic = 0.0;
  double bic = 0.0;
  double icc = 0.0;
  double r2_marginal = 0.0;
  double r2_conditional = 0.0;
  /// True when the optimum sits at sigma2_group = 0.
  bool boundary = false;
  std::size_t n = 0;
  std::size_t n_groups = 0;
  /// Residual df for the fixed-effect t tests: n - #fixed - #groups.
  double df_fixed = 0.0;
  /// Group label -> predicted random intercept (BLUP).
  std::vector<std::pair<std::string, double>> group_effects;

  const Coefficient& coefficient(std::string_view name) const;
};

/// Random-intercept model y = X beta + alpha[group] + eps fitted by REML.
/// beta and sigma2_residual are profiled out; the ratio lambda is found by a
/// log-scale grid followed by golden-section refinement.
/// Throws ValidationError on bad input and ConvergenceError (with bracket
/// diagnostics) when the optimum runs into the upper end of the bracket.
LmmFit lmm_fit(const DesignMatrix& x, std::span<const double> y,
               std::span<const std::string> groups, const LmmOptions& options = {});

/// -2 times the REML log-likelihood at a given lambda, with beta and
/// sigma2_residual profiled out. Exposed for optimality probes.
double reml_deviance(const DesignMatrix& x, std::span<const double> y,
                     std::span<const std::string> groups, double lambda);

struct PseudoR2 {
  double marginal = 0.0;
  double conditional = 0.0;
};

/// Marginal and conditional R^2 from the variance of the fixed-effect linear
/// predictor (sample variance, n - 1) and the fitted variance components.
PseudoR2 pseudo_r2(const LmmFit& fit, const DesignMatrix& x);

}  // namespace resadapt::stats
