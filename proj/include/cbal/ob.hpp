#pragma once

#include <Eigen/Dense>
#include <functional>

#include "cbal/common.hpp"

namespace cbal {

struct ObEstimate {
  double estimate = 0.0;
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd weights;  // implied per-unit weights (Kline form)
};

// OLS fit with intercept on one group's rows, evaluated at a target mean.
// Also exposes the implied linear-combination weights
//   gamma_i = 1/n + (X_i - Xbar)' S^-1 (target - Xbar).
inline ObEstimate ob_estimate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& target_mean) {
  const Eigen::Index n = x.rows(), d = x.cols();
  require(n >= d + 1, ErrorKind::Contract, "too few rows for OLS with intercept");
  require(target_mean.size() == d, ErrorKind::Contract, "target mean has wrong dimension");

  Eigen::RowVectorXd xbar = x.colwise().mean();
  Eigen::MatrixXd xc = x.rowwise() - xbar;
  Eigen::MatrixXd s = xc.transpose() * xc;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
  require(lu.isInvertible(), ErrorKind::Numeric, "rank-deficient design in ob_estimate");

  double ybar = y.mean();
  Eigen::VectorXd beta = lu.solve(xc.transpose() * y);

  ObEstimate out;
  out.coefficients = beta;
  out.intercept = ybar - xbar * beta;
  Eigen::VectorXd shift = target_mean - xbar.transpose();
  out.estimate = ybar + beta.dot(shift);
  Eigen::VectorXd sinv_shift = lu.solve(shift);
  out.weights = (xc * sinv_shift).array() + 1.0 / static_cast<double>(n);
  return out;
}

struct ObMseDecomposition {
  double estimation_error = 0.0;
  double approximation_error = 0.0;
  double d_eff = 0.0;
  double total_mse = 0.0;
};

// Design-conditional MSE of the OB estimator for a known conditional mean m
// and homoskedastic noise: covariates are centered to the group sample mean
// internally, so the design effect reflects the distance between sample and
// target means.
inline ObMseDecomposition ob_mse_decomposition(
    const Eigen::MatrixXd& x_group, const std::function<double(const Eigen::RowVectorXd&)>& m,
    double sigma2, const Eigen::MatrixXd& target_points) {
  require(sigma2 >= 0.0, ErrorKind::Contract, "sigma2 must be >= 0");
  const Eigen::Index n = x_group.rows(), d = x_group.cols();
  require(target_points.cols() == d, ErrorKind::Contract, "target points have wrong dimension");

  Eigen::RowVectorXd xbar = x_group.colwise().mean();
  Eigen::MatrixXd xc = x_group.rowwise() - xbar;
  Eigen::MatrixXd sigma = (xc.transpose() * xc) / static_cast<double>(n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sigma);
  require(lu.isInvertible(), ErrorKind::Numeric, "singular covariance in ob_mse_decomposition");

  Eigen::VectorXd mvals(n);
  for (Eigen::Index i = 0; i < n; ++i) mvals(i) = m(x_group.row(i));
  double mbar = mvals.mean();
  Eigen::VectorXd rho = xc.transpose() * (mvals.array() - mbar).matrix() / static_cast<double>(n);

  Eigen::RowVectorXd target_mean = target_points.colwise().mean();
  Eigen::VectorXd e_centered = (target_mean - xbar).transpose();

  Eigen::VectorXd sinv_e = lu.solve(e_centered);
  double deff_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double proj = xc.row(i).dot(sinv_e);
    deff_sum += proj * proj;
  }
  ObMseDecomposition out;
  out.d_eff = 1.0 + deff_sum / static_cast<double>(n);
  out.estimation_error = out.d_eff * sigma2 / static_cast<double>(n);

  double target_m = 0.0;
  for (Eigen::Index i = 0; i < target_points.rows(); ++i) target_m += m(target_points.row(i));
  target_m /= static_cast<double>(target_points.rows());

  double bias = sinv_e.dot(rho) - (target_m - mbar);
  out.approximation_error = bias * bias;
  out.total_mse = out.estimation_error + out.approximation_error;
  return out;
}

}  // namespace cbal
