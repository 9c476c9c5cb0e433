#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cbal/common.hpp"
#include "cbal/target.hpp"
#include "cbal/weights.hpp"

namespace cbal {

// Dual of the unrestricted clustered balance problem: per-cluster intercepts
// and coefficient vectors, with the mean coefficient shared through the
// partial-pooling penalty.
struct DualSolution {
  Eigen::VectorXd eta0;   // J intercepts
  Eigen::MatrixXd eta;    // J x p coefficients
  Eigen::VectorXd eta_bar;  // mean over clusters

  void check_invariants() const {
    Eigen::VectorXd mean = eta.colwise().mean();
    require((mean - eta_bar).lpNorm<Eigen::Infinity>() <= 1e-12, ErrorKind::Contract,
            "eta_bar must equal the cluster mean of eta");
  }
};

namespace detail_dual {

// Builds the blocked system matrix  Phi'Phi + lambda (D - A)  and the target
// vector phi*, where Phi has one (intercept, basis) column block per cluster
// and D - A centers the non-intercept coefficients across clusters.
struct BlockedSystem {
  Eigen::MatrixXd gram;     // J(p+1) x J(p+1)
  Eigen::VectorXd phi_star;  // J(p+1)
  int J = 0;
  int p = 0;

  int idx(int j, int k) const { return j * (p + 1) + k; }  // k = 0 intercept
};

inline BlockedSystem build_system(const Eigen::MatrixXd& design, const std::vector<int>& cluster,
                                  const TargetDistribution& target, double lambda) {
  const int n = static_cast<int>(design.rows());
  const int p = static_cast<int>(design.cols());
  const int J = target.n_clusters();
  require(static_cast<int>(cluster.size()) == n, ErrorKind::Contract,
          "cluster ids must match design rows");

  BlockedSystem sys;
  sys.J = J;
  sys.p = p;
  const int dim = J * (p + 1);
  sys.gram = Eigen::MatrixXd::Zero(dim, dim);
  sys.phi_star = Eigen::VectorXd::Zero(dim);

  for (int i = 0; i < n; ++i) {
    int j = cluster[static_cast<std::size_t>(i)];
    Eigen::VectorXd row(p + 1);
    row(0) = 1.0;
    row.tail(p) = design.row(i).transpose();
    sys.gram.block(j * (p + 1), j * (p + 1), p + 1, p + 1) += row * row.transpose();
  }
  for (int j = 0; j < J; ++j) {
    sys.phi_star(sys.idx(j, 0)) = target.cluster_mass[static_cast<std::size_t>(j)];
    sys.phi_star.segment(sys.idx(j, 1), p) =
        target.cluster_mass[static_cast<std::size_t>(j)] *
        target.within_cluster_means[static_cast<std::size_t>(j)];
  }
  // lambda (D - A): identity on non-intercept coordinates minus the
  // cross-cluster averaging operator for each coordinate.
  for (int j = 0; j < J; ++j)
    for (int k = 1; k <= p; ++k) {
      sys.gram(sys.idx(j, k), sys.idx(j, k)) += lambda;
      for (int j2 = 0; j2 < J; ++j2)
        sys.gram(sys.idx(j, k), sys.idx(j2, k)) -= lambda / static_cast<double>(J);
    }
  return sys;
}

inline Eigen::VectorXd solve_system(const BlockedSystem& sys, const Eigen::VectorXd& rhs,
                                    const std::string& context) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sys.gram);
  Eigen::VectorXd sol = ldlt.solve(rhs);
  double resid = (sys.gram * sol - rhs).lpNorm<Eigen::Infinity>();
  double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  require(ldlt.info() == Eigen::Success && resid <= 1e-8 * scale, ErrorKind::Numeric,
          context + ": blocked system is singular; increase lambda");
  return sol;
}

}  // namespace detail_dual

// Closed-form unrestricted weights: solve the blocked ridge system and read
// off gamma_i = eta0_{j(i)} + phi(Z_i) . eta_{j(i)}. Requires lambda > 0 for
// strict convexity (the intercepts are unpenalized).
inline std::pair<WeightVector, DualSolution> solve_dual_ridge(
    const Eigen::MatrixXd& comparison_design, const std::vector<int>& comparison_cluster,
    const TargetDistribution& target, double lambda) {
  require(lambda > 0.0, ErrorKind::Contract, "solve_dual_ridge requires lambda > 0");
  auto sys = detail_dual::build_system(comparison_design, comparison_cluster, target, lambda);
  Eigen::VectorXd eta = detail_dual::solve_system(sys, sys.phi_star, "solve_dual_ridge");

  const int J = sys.J, p = sys.p;
  DualSolution dual;
  dual.eta0.resize(J);
  dual.eta.resize(J, p);
  for (int j = 0; j < J; ++j) {
    dual.eta0(j) = eta(sys.idx(j, 0));
    dual.eta.row(j) = eta.segment(sys.idx(j, 1), p).transpose();
  }
  dual.eta_bar = dual.eta.colwise().mean();
  dual.check_invariants();

  WeightVector w;
  const int n = static_cast<int>(comparison_design.rows());
  w.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    int j = comparison_cluster[static_cast<std::size_t>(i)];
    w.weights(i) = dual.eta0(j) + comparison_design.row(i).dot(dual.eta.row(j));
  }
  w.bound_mode = BoundMode::Unrestricted;
  w.lambda = lambda;
  w.cluster_mass = target.cluster_mass;
  w.n_focal = target.n_focal;
  w.solver_report.status = SolveStatus::Solved;
  w.solver_report.note = "closed-form dual";
  return {std::move(w), std::move(dual)};
}

struct RegularizedObFit {
  double estimate = 0.0;
  Eigen::VectorXd intercepts;     // per cluster
  Eigen::MatrixXd coefficients;   // J x p
};

// Partially pooled ridge regression: per-cluster intercepts and coefficients,
// coefficients shrunk toward their cross-cluster mean, intercepts free. The
// prediction is the mass-weighted sum of cluster predictions at the target
// means, which coincides with the weighting estimate from solve_dual_ridge.
inline RegularizedObFit regularized_ob(const Eigen::MatrixXd& design_g,
                                       const std::vector<int>& cluster_g,
                                       const Eigen::VectorXd& outcomes_g,
                                       const TargetDistribution& target, double lambda) {
  require(lambda >= 0.0, ErrorKind::Contract, "lambda must be >= 0");
  require(design_g.rows() == outcomes_g.size(), ErrorKind::Contract,
          "design and outcome lengths differ");
  auto sys = detail_dual::build_system(design_g, cluster_g, target, lambda);

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sys.J * (sys.p + 1));
  for (int i = 0; i < design_g.rows(); ++i) {
    int j = cluster_g[static_cast<std::size_t>(i)];
    rhs(sys.idx(j, 0)) += outcomes_g(i);
    rhs.segment(sys.idx(j, 1), sys.p) += design_g.row(i).transpose() * outcomes_g(i);
  }
  Eigen::VectorXd beta = detail_dual::solve_system(sys, rhs, "regularized_ob");

  RegularizedObFit fit;
  fit.intercepts.resize(sys.J);
  fit.coefficients.resize(sys.J, sys.p);
  for (int j = 0; j < sys.J; ++j) {
    fit.intercepts(j) = beta(sys.idx(j, 0));
    fit.coefficients.row(j) = beta.segment(sys.idx(j, 1), sys.p).transpose();
  }
  fit.estimate = sys.phi_star.dot(beta);
  return fit;
}

}  // namespace cbal
