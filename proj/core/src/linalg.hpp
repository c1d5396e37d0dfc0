#pragma once

// Internal dense least-squares helpers shared by the regression routines.

#include <Eigen/Dense>
#include <vector>

#include "resadapt/design.hpp"

namespace resadapt::linalg {

inline Eigen::MatrixXd to_matrix(const stats::DesignMatrix& x) {
  Eigen::MatrixXd m(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) m(r, c) = x.at(r, c);
  }
  return m;
}

/// Indices of columns that the column-pivoted QR of the unit-norm-scaled
/// matrix leaves beyond its numerical rank.
inline std::vector<std::size_t> dependent_columns(Eigen::MatrixXd m, double tol = 1e-10) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double norm = m.col(c).norm();
    if (norm > 0.0) m.col(c) /= norm;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(tol);
  std::vector<std::size_t> out;
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = qr.rank(); k < m.cols(); ++k) {
    out.push_back(static_cast<std::size_t>(perm(k)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct LeastSquares {
  Eigen::VectorXd beta;
  /// (X'X)^-1, unscaled.
  Eigen::MatrixXd xtx_inverse;
  /// log det(X'X) = 2 sum log |R_ii|.
  double log_det_xtx = 0.0;
  Eigen::VectorXd residuals;
  double rss = 0.0;
};

/// Least squares through a column-pivoted Householder QR. The caller
/// guarantees full column rank.
inline LeastSquares least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  LeastSquares out;
  out.beta = qr.solve(y);
  const Eigen::Index p = x.cols();
  const Eigen::MatrixXd r =
      qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd unpermuted = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  out.xtx_inverse = perm * unpermuted * perm.transpose();
  for (Eigen::Index i = 0; i < p; ++i) out.log_det_xtx += 2.0 * std::log(std::abs(r(i, i)));
  out.residuals = y - x * out.beta;
  out.rss = out.residuals.squaredNorm();
  return out;
}

}  // namespace resadapt::linalg
