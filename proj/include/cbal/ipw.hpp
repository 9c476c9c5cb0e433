#pragma once

#include <Eigen/Dense>
#include <string>

#include "cbal/common.hpp"
#include "cbal/dataset.hpp"
#include "cbal/weights.hpp"

namespace cbal {

struct LogisticFit {
  Eigen::VectorXd coefficients;  // intercept first
  int iterations = 0;
  double deviance = 0.0;
};

// Logistic regression via iteratively reweighted least squares with step
// halving. Diverging coefficients are reported as separation.
inline LogisticFit logistic_irls(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                                 double tol = 1e-10, int max_iter = 100) {
  const Eigen::Index n = x.rows(), d = x.cols();
  require(y.size() == n, ErrorKind::Contract, "length mismatch");

  Eigen::MatrixXd design(n, d + 1);
  design.col(0).setOnes();
  design.rightCols(d) = x;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  auto nll = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd eta = design * b;
    double v = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // log(1 + exp(eta)) - y*eta, computed stably
      double e = eta(i);
      v += (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e))) - y(i) * e;
    }
    return v;
  };

  double current = nll(beta);
  LogisticFit fit;
  for (int iter = 1; iter <= max_iter; ++iter) {
    Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd p = (1.0 + (-eta.array()).exp()).inverse();
    Eigen::VectorXd w = p.array() * (1.0 - p.array());
    Eigen::VectorXd grad = design.transpose() * (y.cast<double>() - p);
    Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step = ldlt.solve(grad);
    bool bad_solve = ldlt.info() != Eigen::Success ||
                     (hess * step - grad).lpNorm<Eigen::Infinity>() >
                         1e-6 * std::max(1.0, grad.lpNorm<Eigen::Infinity>());
    require(!bad_solve, ErrorKind::DegenerateInput,
            "nonoverlap/separation: logistic information matrix is singular");

    // Step halving against the objective.
    double t = 1.0;
    Eigen::VectorXd cand = beta + step;
    double cand_nll = nll(cand);
    int halvings = 0;
    while (cand_nll > current + 1e-14 && halvings < 30) {
      t *= 0.5;
      cand = beta + t * step;
      cand_nll = nll(cand);
      ++halvings;
    }
    double delta = (cand - beta).lpNorm<Eigen::Infinity>();
    beta = cand;
    current = cand_nll;
    fit.iterations = iter;

    require(beta.lpNorm<Eigen::Infinity>() < 1e3, ErrorKind::DegenerateInput,
            "nonoverlap/separation: logistic coefficients diverge");
    if (delta < tol) {
      fit.coefficients = beta;
      fit.deviance = 2.0 * current;
      return fit;
    }
  }
  // A near-perfect fit with growing coefficients is separation, not a
  // convergence failure.
  if (beta.lpNorm<Eigen::Infinity>() > 20.0 || current < 1e-6)
    fail(ErrorKind::DegenerateInput,
         "nonoverlap/separation: logistic coefficients diverge without converging");
  fail(ErrorKind::Numeric, "logistic regression did not converge in " +
                               std::to_string(max_iter) + " iterations (last step after " +
                               std::to_string(fit.iterations) + " iterations)");
}

// Comparison-unit weights e(x)/(1-e(x)) from a logistic fit of the group flag
// on the covariates, Hajek-normalized to sum one.
inline WeightVector fit_ipw_logistic(const AnalysisDataset& ds) {
  const Eigen::Index n = static_cast<Eigen::Index>(ds.n_rows());
  require(ds.n_focal() >= 1 && ds.n_comparison() >= 1, ErrorKind::Contract,
          "both groups must be nonempty");
  Eigen::VectorXi g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = ds.group[static_cast<std::size_t>(i)];
  LogisticFit fit = logistic_irls(ds.covariates, g);

  WeightVector w;
  w.weights.resize(static_cast<Eigen::Index>(ds.n_comparison()));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ds.group[static_cast<std::size_t>(i)] == 1) continue;
    double eta = fit.coefficients(0) + ds.covariates.row(i).dot(fit.coefficients.tail(ds.covariates.cols()));
    w.weights(k++) = std::exp(eta);  // odds e/(1-e)
  }
  w.weights /= w.weights.sum();
  w.bound_mode = BoundMode::Restricted;
  w.lambda = 0.0;
  w.cluster_mass = {1.0};
  w.n_focal = ds.n_focal();
  w.solver_report.status = SolveStatus::Solved;
  w.solver_report.iterations = fit.iterations;
  w.solver_report.note = "ipw: logistic odds, Hajek-normalized";
  return w;
}

}  // namespace cbal
