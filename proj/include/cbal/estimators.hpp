#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cbal/common.hpp"
#include "cbal/weights.hpp"

namespace cbal {

enum class Scale { Difference, RiskRatio };

inline std::string to_string(Scale s) {
  return s == Scale::Difference ? "difference" : "risk_ratio";
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // squared standard error of the mean
};

// Focal group: simple average with V = (1/n^2) sum (Y - mean)^2.
inline MeanVar focal_mean_var(const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  require(n >= 2, ErrorKind::Contract, "focal variance needs at least two rows");
  MeanVar out;
  out.mean = y.mean();
  out.var = (y.array() - out.mean).square().sum() / (static_cast<double>(n) * static_cast<double>(n));
  return out;
}

struct WeightedMean {
  double value = 0.0;
  double weight_sum = 0.0;
  bool hajek_normalized = false;  // set when the raw sum was not already ~1
};

// Hajek form: sum(w y) / sum(w). Invariant to rescaling all weights.
inline WeightedMean weighted_mean(const Eigen::VectorXd& weights, const Eigen::VectorXd& y) {
  require(weights.size() == y.size(), ErrorKind::Contract, "weight/outcome length mismatch");
  double s = weights.sum();
  require(weights.cwiseAbs().maxCoeff() > 0.0, ErrorKind::Contract, "all weights are zero");
  require(std::abs(s) > 1e-300, ErrorKind::Numeric, "weights sum to zero; mean undefined");
  WeightedMean out;
  out.weight_sum = s;
  out.hajek_normalized = std::abs(s - 1.0) > 1e-8;
  out.value = weights.dot(y) / s;
  return out;
}

struct OutcomeModelFit {
  Eigen::VectorXd fitted;                    // per comparison row
  Eigen::VectorXd intercepts;                // per cluster (single entry unclustered)
  Eigen::MatrixXd coefficients;              // J x p, on the original column scale
  double ridge_penalty = 0.0;
  int n_clipped_weights = 0;                 // negative weights zeroed in the fit
  std::vector<int> uniform_weight_clusters;  // clusters refit with uniform weights
};

// Weighted ridge outcome model with per-cluster intercepts and coefficients.
// Negative weights are clipped to zero for the fit (the loss must stay
// convex); the penalty applies to coefficients of standardized columns,
// intercepts are free. Clusters whose clipped weights vanish entirely are fit
// unweighted so their fitted values stay finite.
inline OutcomeModelFit fit_outcome_model(const Eigen::MatrixXd& design,
                                         const std::vector<int>& cluster,
                                         const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                                         double ridge_penalty, int n_clusters = 0) {
  require(ridge_penalty > 0.0, ErrorKind::Contract, "ridge penalty must be > 0");
  const Eigen::Index n = design.rows(), p = design.cols();
  require(y.size() == n && weights.size() == n, ErrorKind::Contract, "length mismatch");
  const int J = cluster.empty() ? 1 : n_clusters;
  require(J >= 1, ErrorKind::Contract, "cluster count required in clustered mode");

  OutcomeModelFit fit;
  fit.ridge_penalty = ridge_penalty;

  Eigen::VectorXd w = weights.cwiseMax(0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    if (weights(i) < 0.0) ++fit.n_clipped_weights;

  // Standardize columns on the pooled sample.
  Eigen::RowVectorXd mu = design.colwise().mean();
  Eigen::RowVectorXd sd(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    double v = (design.col(k).array() - mu(k)).square().sum() / std::max<double>(1, n - 1);
    sd(k) = v > 0 ? std::sqrt(v) : 1.0;
  }

  fit.intercepts.resize(J);
  fit.coefficients.resize(J, p);
  fit.fitted.resize(n);

  for (int j = 0; j < J; ++j) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n; ++i)
      if (cluster.empty() || cluster[static_cast<std::size_t>(i)] == j) rows.push_back(i);
    if (rows.empty()) {
      fit.intercepts(j) = 0.0;
      fit.coefficients.row(j).setZero();
      continue;
    }
    double wsum = 0.0;
    for (auto i : rows) wsum += w(i);
    bool uniform = wsum <= 1e-12;
    if (uniform) fit.uniform_weight_clusters.push_back(j);

    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p + 1, p + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 1);
    Eigen::VectorXd row(p + 1);
    for (auto i : rows) {
      double wi = uniform ? 1.0 : w(i);
      if (wi == 0.0) continue;
      row(0) = 1.0;
      row.tail(p) = ((design.row(i) - mu).array() / sd.array()).transpose();
      g.noalias() += wi * row * row.transpose();
      rhs.noalias() += wi * y(i) * row;
    }
    for (Eigen::Index k = 1; k <= p; ++k) g(k, k) += ridge_penalty;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    Eigen::VectorXd beta = ldlt.solve(rhs);

    // Back to original scale.
    Eigen::VectorXd coef = beta.tail(p).cwiseQuotient(sd.transpose());
    fit.coefficients.row(j) = coef.transpose();
    fit.intercepts(j) = beta(0) - mu * coef;
    for (auto i : rows) fit.fitted(i) = fit.intercepts(j) + design.row(i).dot(coef);
  }
  return fit;
}

// Residualized variance: V = sum(w~^2 (Y - m)^2) with Hajek-normalized weights.
inline double rve_variance(const Eigen::VectorXd& weights, const Eigen::VectorXd& y,
                           const OutcomeModelFit& fit) {
  require(weights.size() == y.size() && fit.fitted.size() == y.size(), ErrorKind::Contract,
          "length mismatch in rve_variance");
  double s = weights.sum();
  require(std::abs(s) > 1e-300, ErrorKind::Numeric, "weights sum to zero");
  Eigen::VectorXd wn = weights / s;
  return (wn.array().square() * (y.array() - fit.fitted.array()).square()).sum();
}

struct Hc2Variance {
  double v_focal = 0.0;
  double v_comparison = 0.0;
};

// Group variance contributions for the coefficient on the group indicator in
// a weighted least squares fit of Y on (intercept, indicator): focal weights
// one, comparison weights gamma. Each contribution is the sandwich term
// sum(w~^2 (Y - Ybar_w)^2) of its group; the leverages h_i = w~_i of the
// weighted design guard against cells with a single effective unit. With a
// constant outcome model the comparison term reproduces rve_variance exactly.
inline Hc2Variance hc2_variance(const Eigen::VectorXd& weights, const Eigen::VectorXd& y_focal,
                                const Eigen::VectorXd& y_comparison) {
  require(weights.size() == y_comparison.size(), ErrorKind::Contract,
          "weight/outcome length mismatch");
  const Eigen::Index n1 = y_focal.size();
  require(n1 >= 1 && y_comparison.size() >= 1, ErrorKind::Contract, "both groups must be nonempty");

  double s = weights.sum();
  require(weights.cwiseAbs().maxCoeff() > 0.0, ErrorKind::Contract, "all weights are zero");
  require(std::abs(s) > 1e-300, ErrorKind::Numeric, "weights sum to zero");
  Eigen::VectorXd wn = weights / s;

  double h_focal = 1.0 / static_cast<double>(n1);
  double h_comp = wn.maxCoeff();
  require(h_focal < 1.0 - 1e-12 && h_comp < 1.0 - 1e-12, ErrorKind::DegenerateInput,
          "leverage = 1: a cell has a single effective unit");

  Hc2Variance out;
  double mu1 = y_focal.mean();
  out.v_focal = (y_focal.array() - mu1).square().sum() /
                (static_cast<double>(n1) * static_cast<double>(n1));
  double mu0 = wn.dot(y_comparison);
  out.v_comparison = (wn.array().square() * (y_comparison.array() - mu0).square()).sum();
  return out;
}

struct DisparityEstimate {
  double mu_focal = 0.0;
  double mu_comparison = 0.0;
  double v_focal = 0.0;
  double v_comparison = 0.0;
  Scale scale = Scale::Difference;
  double point = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double alpha = 0.05;
};

inline DisparityEstimate disparity_difference(const MeanVar& focal, const MeanVar& comparison,
                                              double alpha) {
  require(focal.var >= 0 && comparison.var >= 0, ErrorKind::Contract, "negative variance");
  DisparityEstimate e;
  e.mu_focal = focal.mean;
  e.mu_comparison = comparison.mean;
  e.v_focal = focal.var;
  e.v_comparison = comparison.var;
  e.scale = Scale::Difference;
  e.alpha = alpha;
  e.point = focal.mean - comparison.mean;
  double v = focal.var + comparison.var;
  e.se = std::sqrt(v);
  double z = normal_quantile(1.0 - alpha / 2.0);
  e.ci_low = e.point - z * e.se;
  e.ci_high = e.point + z * e.se;
  return e;
}

// Delta-method interval for the risk ratio on the log scale.
inline DisparityEstimate disparity_risk_ratio(const MeanVar& focal, const MeanVar& comparison,
                                              double alpha) {
  require(focal.mean > 0 && comparison.mean > 0, ErrorKind::Contract,
          "risk ratio requires positive means");
  DisparityEstimate e;
  e.mu_focal = focal.mean;
  e.mu_comparison = comparison.mean;
  e.v_focal = focal.var;
  e.v_comparison = comparison.var;
  e.scale = Scale::RiskRatio;
  e.alpha = alpha;
  e.point = focal.mean / comparison.mean;
  double v = focal.var / (focal.mean * focal.mean) +
             comparison.var / (comparison.mean * comparison.mean);
  e.se = std::sqrt(v);
  double z = normal_quantile(1.0 - alpha / 2.0);
  e.ci_low = std::exp(std::log(e.point) - z * e.se);
  e.ci_high = std::exp(std::log(e.point) + z * e.se);
  return e;
}

}  // namespace cbal
