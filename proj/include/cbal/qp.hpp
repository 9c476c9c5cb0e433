#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "cbal/common.hpp"
#include "cbal/target.hpp"
#include "cbal/weights.hpp"

namespace cbal {

enum class BalanceMode { Clustered, Unclustered };

inline std::string to_string(BalanceMode m) {
  return m == BalanceMode::Clustered ? "clustered" : "unclustered";
}

// The balancing QP in operator-splitting form over x = (gamma, r):
//
//   min  sum_j ||B_j gamma_j - t_j||^2 + lambda ||gamma||^2
//   s.t. linking rows      B gamma - r = t        (defines r)
//        clustered only:   sum_i gamma_i phi_i = overall target   (global balance)
//                          sum_{i in j} gamma_i = P*(H=j)          (cluster mass)
//        restricted only:  gamma >= 0
//
// In unclustered mode the single block is intercept-augmented, so the
// objective softly drives the weights to sum to one; there are no equality
// rows beyond the linking rows.
struct BalanceProblem {
  Eigen::SparseMatrix<double> P;  // nx x nx
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A;  // m x nx
  Eigen::VectorXd lower, upper;

  Eigen::SparseMatrix<double> B;  // stacked imbalance blocks (nb x n_weights)
  Eigen::VectorXd t;              // stacked block targets (nb)

  int n_weights = 0;
  int n_aux = 0;
  int n_link = 0, n_global = 0, n_mass = 0, n_box = 0;

  BalanceMode mode = BalanceMode::Unclustered;
  BoundMode bounds = BoundMode::Unrestricted;
  double lambda = 0.0;

  std::vector<int> cluster_of;       // per weight (empty in unclustered mode)
  std::vector<double> cluster_mass;  // target masses (probability scale)
  std::size_t n_focal = 0;

  int nx() const { return n_weights + n_aux; }
  int m() const { return n_link + n_global + n_mass + n_box; }

  double imbalance(const Eigen::VectorXd& gamma) const {
    return (B * gamma - t).squaredNorm();
  }
  double objective(const Eigen::VectorXd& gamma) const {
    return imbalance(gamma) + lambda * gamma.squaredNorm();
  }
};

// comparison_design: rows of the expanded basis for comparison units only,
// in dataset order; comparison_cluster: interned cluster id per such row
// (ignored in unclustered mode).
inline BalanceProblem assemble_problem(const Eigen::MatrixXd& comparison_design,
                                       const std::vector<int>& comparison_cluster,
                                       const TargetDistribution& target, double lambda,
                                       BoundMode bounds, BalanceMode mode) {
  require(lambda >= 0.0, ErrorKind::Contract, "lambda must be >= 0");
  const int n0 = static_cast<int>(comparison_design.rows());
  require(n0 >= 1, ErrorKind::Contract, "empty comparison group");
  const int p = static_cast<int>(comparison_design.cols());
  const int J = mode == BalanceMode::Clustered ? target.n_clusters() : 1;
  if (mode == BalanceMode::Clustered)
    require(static_cast<int>(comparison_cluster.size()) == n0, ErrorKind::Contract,
            "cluster ids must match comparison rows");

  BalanceProblem prob;
  prob.mode = mode;
  prob.bounds = bounds;
  prob.lambda = lambda;
  prob.n_weights = n0;
  prob.n_focal = target.n_focal;
  prob.cluster_mass = target.cluster_mass;
  if (mode == BalanceMode::Clustered) prob.cluster_of = comparison_cluster;

  const int block_rows = (mode == BalanceMode::Clustered) ? p : p + 1;
  prob.n_aux = (mode == BalanceMode::Clustered) ? J * p : p + 1;

  // Stacked imbalance blocks and their targets.
  std::vector<Eigen::Triplet<double>> btrip;
  prob.t.resize(prob.n_aux);
  if (mode == BalanceMode::Clustered) {
    for (int j = 0; j < J; ++j)
      prob.t.segment(static_cast<Eigen::Index>(j) * p, p) =
          target.cluster_mass[static_cast<std::size_t>(j)] *
          target.within_cluster_means[static_cast<std::size_t>(j)];
    for (int i = 0; i < n0; ++i) {
      int j = comparison_cluster[static_cast<std::size_t>(i)];
      for (int k = 0; k < p; ++k) {
        double v = comparison_design(i, k);
        if (v != 0.0) btrip.emplace_back(j * p + k, i, v);
      }
    }
  } else {
    prob.t(0) = 1.0;
    prob.t.tail(p) = target.overall_mean;
    for (int i = 0; i < n0; ++i) {
      btrip.emplace_back(0, i, 1.0);
      for (int k = 0; k < p; ++k) {
        double v = comparison_design(i, k);
        if (v != 0.0) btrip.emplace_back(1 + k, i, v);
      }
    }
  }
  prob.B.resize(prob.n_aux, n0);
  prob.B.setFromTriplets(btrip.begin(), btrip.end());

  const int nx = prob.nx();
  std::vector<Eigen::Triplet<double>> ptrip;
  for (int i = 0; i < n0; ++i)
    if (lambda > 0.0) ptrip.emplace_back(i, i, 2.0 * lambda);
  for (int k = 0; k < prob.n_aux; ++k) ptrip.emplace_back(n0 + k, n0 + k, 2.0);
  prob.P.resize(nx, nx);
  prob.P.setFromTriplets(ptrip.begin(), ptrip.end());
  prob.q = Eigen::VectorXd::Zero(nx);

  prob.n_link = prob.n_aux;
  prob.n_global = (mode == BalanceMode::Clustered) ? p : 0;
  prob.n_mass = (mode == BalanceMode::Clustered) ? J : 0;
  prob.n_box = (bounds == BoundMode::Restricted) ? n0 : 0;
  const int m = prob.m();

  std::vector<Eigen::Triplet<double>> atrip;
  prob.lower.resize(m);
  prob.upper.resize(m);
  int row = 0;
  // Linking: B gamma - r = t.
  for (int k = 0; k < prob.B.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(prob.B, k); it; ++it)
      atrip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int k = 0; k < prob.n_aux; ++k) atrip.emplace_back(k, n0 + k, -1.0);
  prob.lower.segment(0, prob.n_link) = prob.t;
  prob.upper.segment(0, prob.n_link) = prob.t;
  row += prob.n_link;

  if (mode == BalanceMode::Clustered) {
    // Global balance over all comparison rows.
    for (int i = 0; i < n0; ++i)
      for (int k = 0; k < p; ++k) {
        double v = comparison_design(i, k);
        if (v != 0.0) atrip.emplace_back(row + k, i, v);
      }
    prob.lower.segment(row, p) = target.overall_mean;
    prob.upper.segment(row, p) = target.overall_mean;
    row += p;
    // Per-cluster mass.
    for (int i = 0; i < n0; ++i)
      atrip.emplace_back(row + comparison_cluster[static_cast<std::size_t>(i)], i, 1.0);
    for (int j = 0; j < J; ++j) {
      prob.lower(row + j) = target.cluster_mass[static_cast<std::size_t>(j)];
      prob.upper(row + j) = target.cluster_mass[static_cast<std::size_t>(j)];
    }
    row += J;
  }

  if (bounds == BoundMode::Restricted) {
    for (int i = 0; i < n0; ++i) {
      atrip.emplace_back(row + i, i, 1.0);
      prob.lower(row + i) = 0.0;
      prob.upper(row + i) = kInf;
    }
    row += n0;
  }

  prob.A.resize(m, nx);
  prob.A.setFromTriplets(atrip.begin(), atrip.end());
  return prob;
}

}  // namespace cbal
