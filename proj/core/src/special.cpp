#include "resadapt/special.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "resadapt/error.hpp"

namespace resadapt::special {
namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

// Series expansion of P(a, x); converges quickly for x < a + 1.
double gamma_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw ConvergenceError("incomplete gamma series did not converge");
}

// Continued fraction for Q(a, x) (modified Lentz); used for x >= a + 1.
double gamma_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) {
      return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
  }
  throw ConvergenceError("incomplete gamma continued fraction did not converge");
}

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw ConvergenceError("incomplete beta continued fraction did not converge");
}

}  // namespace

double gamma_p(double a, double x) {
  require(a > 0.0 && std::isfinite(a), "incomplete gamma needs a > 0");
  require(x >= 0.0, "incomplete gamma needs x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? gamma_series(a, x) : 1.0 - gamma_continued_fraction(a, x);
}

double gamma_q(double a, double x) {
  require(a > 0.0 && std::isfinite(a), "incomplete gamma needs a > 0");
  require(x >= 0.0, "incomplete gamma needs x >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - gamma_series(a, x) : gamma_continued_fraction(a, x);
}

double beta_i(double a, double b, double x) {
  require(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b),
          "incomplete beta needs a, b > 0");
  require(x >= 0.0 && x <= 1.0, "incomplete beta needs 0 <= x <= 1");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double chi2_sf(double x, double df) {
  require(df > 0.0 && std::isfinite(df), "chi-square needs df > 0");
  require(x >= 0.0, "chi-square statistic must be >= 0");
  return gamma_q(0.5 * df, 0.5 * x);
}

double t_sf(double t, double df) {
  require(df > 0.0 && std::isfinite(df), "t distribution needs df > 0");
  if (std::isnan(t)) throw ValidationError("t statistic is NaN");
  if (t == 0.0) return 0.5;
  const double tail = 0.5 * beta_i(0.5 * df, 0.5, df / (df + t * t));
  return t > 0.0 ? tail : 1.0 - tail;
}

double t_two_sided_p(double t, double df) {
  require(df > 0.0 && std::isfinite(df), "t distribution needs df > 0");
  if (std::isnan(t)) throw ValidationError("t statistic is NaN");
  if (t == 0.0) return 1.0;
  return beta_i(0.5 * df, 0.5, df / (df + t * t));
}

}  // namespace resadapt::special
