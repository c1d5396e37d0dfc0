#include "resadapt/regression.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "linalg.hpp"
#include "resadapt/error.hpp"
#include "resadapt/special.hpp"

namespace resadapt::stats {
namespace {

const Coefficient& find_coefficient(const std::vector<Coefficient>& cs, std::string_view name) {
  for (const auto& c : cs) {
    if (c.name == name) return c;
  }
  throw ValidationError("no coefficient named '" + std::string(name) + "'");
}

std::vector<Coefficient> coefficient_table(const DesignMatrix& x, const Eigen::VectorXd& beta,
                                           const Eigen::MatrixXd& cov, double df) {
  std::vector<Coefficient> out;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    Coefficient k;
    k.name = x.column_names()[c];
    k.estimate = beta(static_cast<Eigen::Index>(c));
    k.std_error = std::sqrt(std::max(0.0, cov(c, c)));
    k.t_value = k.std_error > 0.0 ? k.estimate / k.std_error
                                  : (k.estimate == 0.0 ? 0.0 : std::copysign(INFINITY, k.estimate));
    if (std::isinf(k.t_value)) {
      k.p_value = 0.0;
    } else {
      k.p_value = special::t_two_sided_p(k.t_value, df);
    }
    out.push_back(std::move(k));
  }
  return out;
}

/// Group structure: index of each row's group and group sizes.
struct Groups {
  std::vector<std::size_t> of_row;
  std::vector<std::string> labels;
  std::vector<std::size_t> sizes;
};

Groups index_groups(std::span<const std::string> groups) {
  Groups g;
  std::map<std::string, std::size_t> index;
  g.of_row.reserve(groups.size());
  for (const auto& label : groups) {
    auto [it, inserted] = index.emplace(label, g.labels.size());
    if (inserted) {
      g.labels.push_back(label);
      g.sizes.push_back(0);
    }
    ++g.sizes[it->second];
    g.of_row.push_back(it->second);
  }
  return g;
}

/// Profiled quantities at one lambda, computed on the whitened problem
/// V^{-1/2} y = V^{-1/2} X beta + e with V = I + lambda Z Z'.
struct Profile {
  linalg::LeastSquares ls;
  double log_det_v = 0.0;
  double reml_deviance = 0.0;  // -2 l_REML
  double ml_deviance = 0.0;    // -2 l_ML at the same beta
};

Profile profile_at(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Groups& g,
                   double lambda) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const std::size_t k = g.sizes.size();

  // V^{-1/2} = I - c_g J within each group, c_g = (1 - 1/sqrt(1 + lambda n_g)) / n_g.
  std::vector<double> c(k);
  Profile out;
  for (std::size_t j = 0; j < k; ++j) {
    const double ng = static_cast<double>(g.sizes[j]);
    c[j] = (1.0 - 1.0 / std::sqrt(1.0 + lambda * ng)) / ng;
    out.log_det_v += std::log1p(lambda * ng);
  }
  Eigen::MatrixXd xs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), p);
  Eigen::VectorXd ys = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto j = static_cast<Eigen::Index>(g.of_row[r]);
    xs.row(j) += x.row(r);
    ys(j) += y(r);
  }
  Eigen::MatrixXd xw = x;
  Eigen::VectorXd yw = y;
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto j = g.of_row[r];
    if (c[j] == 0.0) continue;
    xw.row(r) -= c[j] * xs.row(static_cast<Eigen::Index>(j));
    yw(r) -= c[j] * ys(static_cast<Eigen::Index>(j));
  }
  out.ls = linalg::least_squares(xw, yw);

  const double nd = static_cast<double>(n);
  const double dfr = static_cast<double>(n - p);
  const double two_pi = 2.0 * std::numbers::pi;
  out.reml_deviance = dfr * (1.0 + std::log(two_pi * out.ls.rss / dfr)) + out.log_det_v +
                      out.ls.log_det_xtx;
  out.ml_deviance = nd * (1.0 + std::log(two_pi * out.ls.rss / nd)) + out.log_det_v;
  return out;
}

void validate_lmm_input(const DesignMatrix& x, std::span<const double> y,
                        std::span<const std::string> groups) {
  if (y.size() != x.rows() || groups.size() != x.rows()) {
    throw ValidationError("LMM: design, response and groups differ in length");
  }
  if (x.rows() <= x.cols()) {
    throw ValidationError("LMM needs more observations than fixed effects");
  }
}

}  // namespace

const Coefficient& OlsFit::coefficient(std::string_view name) const {
  return find_coefficient(coefficients, name);
}

const Coefficient& LmmFit::coefficient(std::string_view name) const {
  return find_coefficient(fixed, name);
}

OlsFit ols_fit(const DesignMatrix& x, std::span<const double> y) {
  if (y.size() != x.rows()) throw ValidationError("OLS: response length differs from design");
  if (x.rows() <= x.cols()) {
    throw ValidationError("OLS needs n > #columns (n = " + std::to_string(x.rows()) +
                          ", columns = " + std::to_string(x.cols()) + ")");
  }
  check_full_rank(x);
  const Eigen::MatrixXd xm = linalg::to_matrix(x);
  const Eigen::VectorXd ym = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
  const auto ls = linalg::least_squares(xm, ym);

  OlsFit fit;
  fit.n = x.rows();
  fit.df_residual = x.rows() - x.cols();
  const double df = static_cast<double>(fit.df_residual);
  const double sigma2 = ls.rss / df;
  fit.residual_se = std::sqrt(sigma2);
  fit.coefficients = coefficient_table(x, ls.beta, sigma2 * ls.xtx_inverse, df);

  const double ybar = ym.mean();
  const double sst = (ym.array() - ybar).square().sum();
  const bool has_intercept =
      std::find(x.column_names().begin(), x.column_names().end(), "(Intercept)") !=
      x.column_names().end();
  if (sst > 0.0 && has_intercept) {
    fit.r_squared = std::clamp(1.0 - ls.rss / sst, 0.0, 1.0);
    fit.adj_r_squared =
        1.0 - (1.0 - fit.r_squared) * (static_cast<double>(fit.n) - 1.0) / df;
  }
  fit.adj_r_squared = std::min(fit.adj_r_squared, fit.r_squared);
  const Eigen::VectorXd fitted = ym - ls.residuals;
  fit.fitted.assign(fitted.data(), fitted.data() + fitted.size());
  fit.residuals.assign(ls.residuals.data(), ls.residuals.data() + ls.residuals.size());
  return fit;
}

double reml_deviance(const DesignMatrix& x, std::span<const double> y,
                     std::span<const std::string> groups, double lambda) {
  validate_lmm_input(x, y, groups);
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  const Eigen::VectorXd ym = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
  return profile_at(linalg::to_matrix(x), ym, index_groups(groups), lambda).reml_deviance;
}

LmmFit lmm_fit(const DesignMatrix& x, std::span<const double> y,
               std::span<const std::string> groups, const LmmOptions& options) {
  validate_lmm_input(x, y, groups);
  check_full_rank(x);
  const Groups g = index_groups(groups);
  if (g.labels.size() < 2) throw ValidationError("LMM needs at least 2 groups");
  if (options.grid_points < 3 || !(options.log_lambda_min < options.log_lambda_max)) {
    throw ValidationError("LMM search bracket is malformed");
  }

  const Eigen::MatrixXd xm = linalg::to_matrix(x);
  const Eigen::VectorXd ym = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
  const auto deviance = [&](double log_lambda) {
    return profile_at(xm, ym, g, std::exp(log_lambda)).reml_deviance;
  };

  double lambda = 0.0;
  bool boundary = false;
  if (options.fixed_lambda) {
    if (!(*options.fixed_lambda >= 0.0)) throw ValidationError("fixed lambda must be >= 0");
    lambda = *options.fixed_lambda;
    boundary = lambda == 0.0;
  } else {
    const int m = options.grid_points;
    const double step = (options.log_lambda_max - options.log_lambda_min) / (m - 1);
    std::vector<double> grid(m), value(m);
    int best = 0;
    for (int i = 0; i < m; ++i) {
      grid[i] = options.log_lambda_min + step * i;
      value[i] = deviance(grid[i]);
      if (!std::isfinite(value[i])) {
        std::ostringstream msg;
        msg << "REML deviance is not finite at log(lambda) = " << grid[i];
        throw ConvergenceError(msg.str());
      }
      if (value[i] < value[best]) best = i;
    }
    if (best == m - 1) {
      std::ostringstream msg;
      msg << "REML optimum not bracketed: minimum at upper bracket end log(lambda) = "
          << grid[best] << " (bracket [" << options.log_lambda_min << ", "
          << options.log_lambda_max << "], deviance " << value[best] << ", neighbour "
          << value[best - 1] << ")";
      throw ConvergenceError(msg.str());
    }
    const double at_zero = profile_at(xm, ym, g, 0.0).reml_deviance;
    if (best == 0) {
      boundary = at_zero <= value[0];
      lambda = boundary ? 0.0 : std::exp(grid[0]);
    } else {
      // Golden-section search on [grid[best-1], grid[best+1]].
      const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
      double a = grid[best - 1], b = grid[best + 1];
      double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
      double fc = deviance(c), fd = deviance(d);
      while (b - a > options.tolerance) {
        if (fc < fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - inv_phi * (b - a);
          fc = deviance(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + inv_phi * (b - a);
          fd = deviance(d);
        }
      }
      const double log_opt = 0.5 * (a + b);
      const double f_opt = deviance(log_opt);
      if (at_zero <= f_opt) {
        boundary = true;
        lambda = 0.0;
      } else {
        lambda = std::exp(log_opt);
      }
    }
  }

  const Profile prof = profile_at(xm, ym, g, lambda);
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  LmmFit fit;
  fit.n = n;
  fit.n_groups = g.labels.size();
  fit.lambda = lambda;
  fit.boundary = boundary;
  fit.var_residual = prof.ls.rss / static_cast<double>(n - p);
  fit.var_group = lambda * fit.var_residual;
  fit.icc = fit.var_group / (fit.var_group + fit.var_residual);
  fit.reml_loglik = -0.5 * prof.reml_deviance;
  fit.ml_loglik = -0.5 * prof.ml_deviance;
  const double k = static_cast<double>(p + 2);
  fit.aic = 2.0 * k - 2.0 * fit.ml_loglik;
  fit.bic = k * std::log(static_cast<double>(n)) - 2.0 * fit.ml_loglik;

  fit.df_fixed = static_cast<double>(n) - static_cast<double>(p) -
                 static_cast<double>(fit.n_groups);
  if (fit.df_fixed <= 0.0) {
    throw ValidationError("LMM: n - #fixed - #groups must be positive for t tests");
  }
  fit.fixed = coefficient_table(x, prof.ls.beta, fit.var_residual * prof.ls.xtx_inverse,
                                fit.df_fixed);

  // BLUP of each group intercept: lambda n_g / (1 + lambda n_g) * mean residual.
  const Eigen::VectorXd resid = ym - xm * prof.ls.beta;
  std::vector<double> sums(g.labels.size(), 0.0);
  for (std::size_t r = 0; r < n; ++r) sums[g.of_row[r]] += resid(static_cast<Eigen::Index>(r));
  for (std::size_t j = 0; j < g.labels.size(); ++j) {
    const double ng = static_cast<double>(g.sizes[j]);
    fit.group_effects.emplace_back(g.labels[j], lambda / (1.0 + lambda * ng) * sums[j]);
  }

  const auto r2 = pseudo_r2(fit, x);
  fit.r2_marginal = r2.marginal;
  fit.r2_conditional = r2.conditional;
  return fit;
}

PseudoR2 pseudo_r2(const LmmFit& fit, const DesignMatrix& x) {
  if (fit.fixed.size() != x.cols()) {
    throw ValidationError("pseudo R2: design does not match the fit");
  }
  const std::size_t n = x.rows();
  std::vector<double> eta(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) eta[r] += x.at(r, c) * fit.fixed[c].estimate;
  }
  double var_f = 0.0;
  if (n > 1) {
    double mean = 0.0;
    for (double e : eta) mean += e;
    mean /= static_cast<double>(n);
    for (double e : eta) var_f += (e - mean) * (e - mean);
    var_f /= static_cast<double>(n - 1);
  }
  // An intercept-only predictor is constant up to rounding.
  if (x.cols() == 1) var_f = 0.0;
  const double total = var_f + fit.var_group + fit.var_residual;
  if (!(total > 0.0)) return {};
  return {var_f / total, (var_f + fit.var_group) / total};
}

}  // namespace resadapt::stats
