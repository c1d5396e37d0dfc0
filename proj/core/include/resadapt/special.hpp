#pragma once

// Regularized incomplete gamma/beta functions and the survival functions
// built on them. Accuracy target: absolute error below 1e-10.

namespace resadapt::special {

/// P(a, x) = gamma(a, x) / Gamma(a), a > 0, x >= 0.
double gamma_p(double a, double x);
/// Q(a, x) = 1 - P(a, x), computed directly to keep the upper tail accurate.
double gamma_q(double a, double x);

/// I_x(a, b), a, b > 0, 0 <= x <= 1.
double beta_i(double a, double b, double x);

/// Upper tail of the chi-square distribution: P(X > x).
double chi2_sf(double x, double df);

/// Upper tail of Student's t: P(T > t).
double t_sf(double t, double df);

/// Two-sided p-value P(|T| > |t|).
double t_two_sided_p(double t, double df);

}  // namespace resadapt::special
