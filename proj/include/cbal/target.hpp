#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cbal/basis.hpp"
#include "cbal/common.hpp"
#include "cbal/dataset.hpp"

namespace cbal {

// Target distribution over (cluster, basis) space: cluster masses and
// within-cluster basis means, plus the implied overall mean. For unclustered
// data there is a single pseudo-cluster with mass 1.
struct TargetDistribution {
  std::vector<double> cluster_mass;            // per cluster id, sums to 1
  std::vector<Eigen::VectorXd> within_cluster_means;  // per cluster id, length p
  Eigen::VectorXd overall_mean;                // length p
  Eigen::Index basis_dim = 0;
  std::size_t n_focal = 0;                     // count behind the empirical target

  int n_clusters() const { return static_cast<int>(cluster_mass.size()); }

  void check_invariants() const {
    double total = 0.0;
    for (double m : cluster_mass) {
      require(m >= 0.0, ErrorKind::Contract, "negative cluster mass");
      total += m;
    }
    require(std::abs(total - 1.0) <= 1e-12, ErrorKind::Contract, "cluster masses must sum to 1");
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(basis_dim);
    for (std::size_t j = 0; j < cluster_mass.size(); ++j)
      mix += cluster_mass[j] * within_cluster_means[j];
    require((mix - overall_mean).cwiseAbs().maxCoeff() <= 1e-10,
            ErrorKind::Contract, "cluster means do not mix to the overall mean");
  }
};

// Empirical target: the focal group's distribution. Cluster masses are focal
// shares, within-cluster means are focal means of the expanded basis.
inline TargetDistribution empirical_target(const AnalysisDataset& ds, const ExpandedDesign& design) {
  const Eigen::Index p = design.p();
  TargetDistribution t;
  t.basis_dim = p;
  t.n_focal = ds.n_focal();
  require(t.n_focal >= 1, ErrorKind::Contract, "empirical target needs at least one focal row");

  const int J = ds.clustered() ? ds.n_clusters() : 1;
  std::vector<std::size_t> focal_count(static_cast<std::size_t>(J), 0);
  std::vector<std::size_t> comparison_count(static_cast<std::size_t>(J), 0);
  std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(J), Eigen::VectorXd::Zero(p));
  Eigen::VectorXd overall = Eigen::VectorXd::Zero(p);

  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    int j = ds.clustered() ? ds.cluster[i] : 0;
    if (ds.group[i] == 1) {
      ++focal_count[static_cast<std::size_t>(j)];
      sums[static_cast<std::size_t>(j)] += design.matrix.row(static_cast<Eigen::Index>(i)).transpose();
      overall += design.matrix.row(static_cast<Eigen::Index>(i)).transpose();
    } else {
      ++comparison_count[static_cast<std::size_t>(j)];
    }
  }

  if (ds.clustered()) {
    std::string offenders;
    for (int j = 0; j < J; ++j) {
      if (focal_count[static_cast<std::size_t>(j)] > 0 && comparison_count[static_cast<std::size_t>(j)] == 0) {
        if (!offenders.empty()) offenders += ", ";
        offenders += ds.cluster_labels[static_cast<std::size_t>(j)];
      }
    }
    require(offenders.empty(), ErrorKind::Validation,
            "no-overlap cluster(s) with focal rows but no comparison rows: " + offenders);
  }

  for (int j = 0; j < J; ++j) {
    std::size_t c = focal_count[static_cast<std::size_t>(j)];
    t.cluster_mass.push_back(static_cast<double>(c) / static_cast<double>(t.n_focal));
    t.within_cluster_means.push_back(c > 0 ? Eigen::VectorXd(sums[static_cast<std::size_t>(j)] / static_cast<double>(c))
                                           : Eigen::VectorXd(Eigen::VectorXd::Zero(p)));
  }
  t.overall_mean = overall / static_cast<double>(t.n_focal);
  t.check_invariants();
  return t;
}

}  // namespace cbal
