#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "cbal/target.hpp"

// Random clustered balance instances shared by solver and equivalence tests.
namespace instances {

struct ClusteredInstance {
  Eigen::MatrixXd comparison_design;  // n0 x p
  std::vector<int> comparison_cluster;
  Eigen::VectorXd comparison_y;
  cbal::TargetDistribution target;
  int J = 0;
};

inline ClusteredInstance make_clustered(std::uint64_t seed, int max_n = 60, int max_p = 5,
                                        int max_j = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::uniform_int_distribution<int> pj(1, max_j);
  const int J = pj(rng);
  std::uniform_int_distribution<int> pp(1, max_p);
  const int p = pp(rng);

  // Focal rows define the empirical target; comparison rows the design.
  // Every cluster gets enough comparison rows to keep the within-cluster
  // systems well posed and the restricted problem feasible in practice.
  std::vector<Eigen::VectorXd> focal_rows;
  std::vector<int> focal_cluster;
  std::vector<Eigen::VectorXd> comp_rows;
  std::vector<int> comp_cluster;
  const int comp_floor = p + 3;
  int budget = std::max(max_n, J * (comp_floor + 2));
  std::uniform_int_distribution<int> extra_comp(0, std::max(1, budget / (2 * J) - comp_floor));
  std::uniform_int_distribution<int> extra_focal(1, std::max(2, budget / (3 * J)));
  for (int j = 0; j < J; ++j) {
    int nc = comp_floor + extra_comp(rng);
    int nf = extra_focal(rng);
    for (int i = 0; i < nc; ++i) {
      Eigen::VectorXd v(p);
      for (int k = 0; k < p; ++k) v(k) = norm(rng);
      comp_rows.push_back(v);
      comp_cluster.push_back(j);
    }
    for (int i = 0; i < nf; ++i) {
      Eigen::VectorXd v(p);
      for (int k = 0; k < p; ++k) v(k) = norm(rng);
      focal_rows.push_back(v);
      focal_cluster.push_back(j);
    }
  }

  ClusteredInstance inst;
  inst.J = J;
  const int n0 = static_cast<int>(comp_rows.size());
  inst.comparison_design.resize(n0, p);
  for (int i = 0; i < n0; ++i) inst.comparison_design.row(i) = comp_rows[(std::size_t)i].transpose();
  inst.comparison_cluster = comp_cluster;
  inst.comparison_y.resize(n0);
  for (int i = 0; i < n0; ++i) inst.comparison_y(i) = norm(rng);

  const int n1 = static_cast<int>(focal_rows.size());
  inst.target.basis_dim = p;
  inst.target.n_focal = static_cast<std::size_t>(n1);
  std::vector<int> counts(static_cast<std::size_t>(J), 0);
  std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(J), Eigen::VectorXd::Zero(p));
  Eigen::VectorXd overall = Eigen::VectorXd::Zero(p);
  for (int i = 0; i < n1; ++i) {
    counts[(std::size_t)focal_cluster[(std::size_t)i]] += 1;
    sums[(std::size_t)focal_cluster[(std::size_t)i]] += focal_rows[(std::size_t)i];
    overall += focal_rows[(std::size_t)i];
  }
  for (int j = 0; j < J; ++j) {
    inst.target.cluster_mass.push_back(static_cast<double>(counts[(std::size_t)j]) / n1);
    inst.target.within_cluster_means.push_back(
        counts[(std::size_t)j] > 0 ? Eigen::VectorXd(sums[(std::size_t)j] / counts[(std::size_t)j])
                                   : Eigen::VectorXd(Eigen::VectorXd::Zero(p)));
  }
  inst.target.overall_mean = overall / n1;
  return inst;
}

// Dense constraint system (global balance + cluster masses) for the oracle.
inline void constraint_system(const ClusteredInstance& inst, Eigen::MatrixXd& e,
                              Eigen::VectorXd& b) {
  const int n0 = static_cast<int>(inst.comparison_design.rows());
  const int p = static_cast<int>(inst.comparison_design.cols());
  e = Eigen::MatrixXd::Zero(p + inst.J, n0);
  b.resize(p + inst.J);
  for (int i = 0; i < n0; ++i) {
    for (int k = 0; k < p; ++k) e(k, i) = inst.comparison_design(i, k);
    e(p + inst.comparison_cluster[(std::size_t)i], i) = 1.0;
  }
  b.head(p) = inst.target.overall_mean;
  for (int j = 0; j < inst.J; ++j) b(p + j) = inst.target.cluster_mass[(std::size_t)j];
}

// Stacked within-cluster imbalance blocks for the oracle objective.
inline void objective_blocks(const ClusteredInstance& inst, Eigen::MatrixXd& bmat,
                             Eigen::VectorXd& t) {
  const int n0 = static_cast<int>(inst.comparison_design.rows());
  const int p = static_cast<int>(inst.comparison_design.cols());
  bmat = Eigen::MatrixXd::Zero(inst.J * p, n0);
  t.resize(inst.J * p);
  for (int i = 0; i < n0; ++i) {
    int j = inst.comparison_cluster[(std::size_t)i];
    for (int k = 0; k < p; ++k) bmat(j * p + k, i) = inst.comparison_design(i, k);
  }
  for (int j = 0; j < inst.J; ++j)
    t.segment(j * p, p) =
        inst.target.cluster_mass[(std::size_t)j] * inst.target.within_cluster_means[(std::size_t)j];
}

}  // namespace instances
