#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cbal/admm.hpp"
#include "cbal/common.hpp"
#include "cbal/qp.hpp"
#include "cbal/weights.hpp"

namespace cbal {

// n_eff = (sum w)^2 / sum w^2; scale invariant.
inline double effective_sample_size(const Eigen::VectorXd& weights) {
  require(weights.size() > 0 && weights.cwiseAbs().maxCoeff() > 0.0, ErrorKind::Contract,
          "effective sample size needs a nonzero weight");
  double s = weights.sum();
  return s * s / weights.squaredNorm();
}

inline std::vector<double> effective_sample_size_per_cluster(const Eigen::VectorXd& weights,
                                                             const std::vector<int>& cluster,
                                                             int n_clusters) {
  std::vector<double> s(static_cast<std::size_t>(n_clusters), 0.0);
  std::vector<double> s2(static_cast<std::size_t>(n_clusters), 0.0);
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    auto j = static_cast<std::size_t>(cluster[static_cast<std::size_t>(i)]);
    s[j] += weights(i);
    s2[j] += weights(i) * weights(i);
  }
  std::vector<double> out(static_cast<std::size_t>(n_clusters), 0.0);
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = s2[j] > 0.0 ? s[j] * s[j] / s2[j] : 0.0;
  return out;
}

struct StdDiff {
  double value = 0.0;
  bool skipped = false;  // zero pooled variance or a group too small
};

// Standardized differences (focal mean - comparison mean) / pooled SD, with
// unweighted group variances in the denominator both before and after
// weighting. The comparison mean is the Hajek-weighted mean when weights are
// supplied.
inline std::vector<StdDiff> standardized_differences(const Eigen::MatrixXd& focal,
                                                     const Eigen::MatrixXd& comparison,
                                                     const Eigen::VectorXd* weights = nullptr) {
  require(focal.cols() == comparison.cols(), ErrorKind::Contract, "covariate dimension mismatch");
  if (weights)
    require(weights->size() == comparison.rows(), ErrorKind::Contract,
            "weights must match comparison rows");
  const Eigen::Index k = focal.cols();
  std::vector<StdDiff> out(static_cast<std::size_t>(k));
  const Eigen::Index n1 = focal.rows(), n0 = comparison.rows();
  double wsum = weights ? weights->sum() : 0.0;

  for (Eigen::Index c = 0; c < k; ++c) {
    StdDiff& d = out[static_cast<std::size_t>(c)];
    if (n1 < 2 || n0 < 2) {
      d.skipped = true;
      continue;
    }
    double m1 = focal.col(c).mean();
    double v1 = (focal.col(c).array() - m1).square().sum() / static_cast<double>(n1 - 1);
    double m0u = comparison.col(c).mean();
    double v0 = (comparison.col(c).array() - m0u).square().sum() / static_cast<double>(n0 - 1);
    double pooled = (v1 + v0) / 2.0;
    if (pooled <= 0.0) {
      d.skipped = true;
      continue;
    }
    double m0 = m0u;
    if (weights) {
      if (std::abs(wsum) < 1e-300) {
        d.skipped = true;
        continue;
      }
      m0 = weights->dot(comparison.col(c)) / wsum;
    }
    d.value = (m1 - m0) / std::sqrt(pooled);
  }
  return out;
}

struct PbrResult {
  double value = 0.0;
  bool defined = false;  // false when the unweighted imbalance is zero
};

// 100 * (1 - sum|after| / sum|before|). Negative values mean weighting made
// balance worse; entries skipped on either side are excluded pairwise.
inline PbrResult pbr(const std::vector<StdDiff>& before, const std::vector<StdDiff>& after) {
  require(before.size() == after.size(), ErrorKind::Contract, "covariate sets differ");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before[i].skipped || after[i].skipped) continue;
    den += std::abs(before[i].value);
    num += std::abs(after[i].value);
  }
  PbrResult r;
  if (den <= 0.0) return r;  // no baseline imbalance
  r.defined = true;
  r.value = 100.0 * (1.0 - num / den);
  return r;
}

// Same ratio over per-cluster standardized-difference stacks.
inline PbrResult pbr_within_clusters(const std::vector<std::vector<StdDiff>>& before,
                                     const std::vector<std::vector<StdDiff>>& after) {
  require(before.size() == after.size(), ErrorKind::Contract, "cluster sets differ");
  std::vector<StdDiff> b, a;
  for (std::size_t j = 0; j < before.size(); ++j) {
    require(before[j].size() == after[j].size(), ErrorKind::Contract, "covariate sets differ");
    b.insert(b.end(), before[j].begin(), before[j].end());
    a.insert(a.end(), after[j].begin(), after[j].end());
  }
  return pbr(b, a);
}

struct RmsiResult {
  std::vector<StdDiff> per_covariate;  // root mean squared over clusters
  double overall = 0.0;                // mean over non-skipped covariates
};

// Root-mean-squared imbalance across clusters: squaring prevents imbalances
// of opposite sign from averaging away.
inline RmsiResult rmsi(const std::vector<std::vector<StdDiff>>& per_cluster_deltas) {
  RmsiResult out;
  if (per_cluster_deltas.empty()) return out;
  std::size_t k = per_cluster_deltas.front().size();
  out.per_covariate.resize(k);
  double total = 0.0;
  int counted = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double ss = 0.0;
    int m = 0;
    for (const auto& cluster : per_cluster_deltas) {
      require(cluster.size() == k, ErrorKind::Contract, "covariate sets differ across clusters");
      if (cluster[c].skipped) continue;
      ss += cluster[c].value * cluster[c].value;
      ++m;
    }
    if (m == 0) {
      out.per_covariate[c].skipped = true;
      continue;
    }
    out.per_covariate[c].value = std::sqrt(ss / m);
    total += out.per_covariate[c].value;
    ++counted;
  }
  out.overall = counted > 0 ? total / counted : 0.0;
  return out;
}

struct ExtrapolationResult {
  double overall_pct = 0.0;
  std::vector<double> per_cluster_pct;  // NaN where the cluster mass is zero
  std::string note;
};

// Absolute negative mass as a share of the cluster target mass, on the count
// scale. Restricted weights extrapolate nothing by construction.
inline ExtrapolationResult extrapolation_percentage(const WeightVector& w,
                                                    const std::vector<int>& cluster) {
  ExtrapolationResult out;
  const int J = static_cast<int>(w.cluster_mass.size());
  out.per_cluster_pct.assign(static_cast<std::size_t>(J), 0.0);
  if (w.bound_mode == BoundMode::Restricted) {
    out.note = "restricted weights: no extrapolation by construction";
    return out;
  }
  require(static_cast<Eigen::Index>(cluster.size()) == w.weights.size() || J == 1,
          ErrorKind::Contract, "cluster ids must match weights");
  std::vector<double> neg(static_cast<std::size_t>(J), 0.0);
  double neg_total = 0.0;
  for (Eigen::Index i = 0; i < w.weights.size(); ++i) {
    double v = w.weights(i);
    if (v < 0.0) {
      int j = J == 1 ? 0 : cluster[static_cast<std::size_t>(i)];
      neg[static_cast<std::size_t>(j)] += -v;
      neg_total += -v;
    }
  }
  double mass_total = 0.0;
  for (int j = 0; j < J; ++j) {
    double mass = w.cluster_mass[static_cast<std::size_t>(j)];
    mass_total += mass;
    out.per_cluster_pct[static_cast<std::size_t>(j)] =
        mass > 0.0 ? 100.0 * neg[static_cast<std::size_t>(j)] / mass
                   : std::numeric_limits<double>::quiet_NaN();
  }
  out.overall_pct = mass_total > 0.0 ? 100.0 * neg_total / mass_total : 0.0;
  return out;
}

struct WeightSummary {
  double max_weight_count_scale = 0.0;
  double share_below_1e6 = 0.0;  // |weight| < 1e-6 on the count scale
  double ess_total = 0.0;
  std::vector<double> ess_per_cluster;
};

inline WeightSummary weight_summary(const WeightVector& w, const std::vector<int>& cluster = {}) {
  require(w.weights.size() > 0, ErrorKind::Contract, "empty weight vector");
  WeightSummary out;
  Eigen::VectorXd c = w.count_scale();
  out.max_weight_count_scale = c.maxCoeff();
  out.share_below_1e6 =
      static_cast<double>((c.cwiseAbs().array() < 1e-6).count()) / static_cast<double>(c.size());
  out.ess_total = effective_sample_size(w.weights);
  if (!cluster.empty())
    out.ess_per_cluster = effective_sample_size_per_cluster(
        w.weights, cluster, static_cast<int>(w.cluster_mass.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Lambda sweep
// ---------------------------------------------------------------------------

struct SweepInputs {
  Eigen::MatrixXd comparison_design;  // expanded basis, comparison rows
  std::vector<int> comparison_cluster;
  TargetDistribution target;
  BalanceMode mode = BalanceMode::Unclustered;
  // Raw covariates for the balance report.
  Eigen::MatrixXd focal_covariates;
  Eigen::MatrixXd comparison_covariates;
  std::vector<int> focal_cluster;  // clustered mode only
};

struct SweepRow {
  double lambda = 0.0;
  double pbr = 0.0;
  bool pbr_defined = false;
  double ess = 0.0;
  double imbalance = 0.0;  // QP objective's balance term at the solution
  double sum_sq_weights = 0.0;
  std::string status;
  std::optional<WeightVector> weights;
};

namespace detail_diag {

inline std::vector<std::vector<StdDiff>> clustered_deltas(const SweepInputs& in,
                                                          const Eigen::VectorXd* weights) {
  const int J = in.target.n_clusters();
  std::vector<std::vector<StdDiff>> out;
  for (int j = 0; j < J; ++j) {
    std::vector<Eigen::Index> frows, crows;
    for (std::size_t i = 0; i < in.focal_cluster.size(); ++i)
      if (in.focal_cluster[i] == j) frows.push_back(static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < in.comparison_cluster.size(); ++i)
      if (in.comparison_cluster[i] == j) crows.push_back(static_cast<Eigen::Index>(i));
    Eigen::MatrixXd f(static_cast<Eigen::Index>(frows.size()), in.focal_covariates.cols());
    Eigen::MatrixXd c(static_cast<Eigen::Index>(crows.size()), in.comparison_covariates.cols());
    Eigen::VectorXd wj(static_cast<Eigen::Index>(crows.size()));
    for (std::size_t r = 0; r < frows.size(); ++r)
      f.row(static_cast<Eigen::Index>(r)) = in.focal_covariates.row(frows[r]);
    for (std::size_t r = 0; r < crows.size(); ++r) {
      c.row(static_cast<Eigen::Index>(r)) = in.comparison_covariates.row(crows[r]);
      if (weights) wj(static_cast<Eigen::Index>(r)) = (*weights)(crows[r]);
    }
    out.push_back(standardized_differences(f, c, weights ? &wj : nullptr));
  }
  return out;
}

inline PbrResult sweep_pbr(const SweepInputs& in, const Eigen::VectorXd& weights) {
  if (in.mode == BalanceMode::Clustered) {
    auto before = clustered_deltas(in, nullptr);
    auto after = clustered_deltas(in, &weights);
    return pbr_within_clusters(before, after);
  }
  auto before = standardized_differences(in.focal_covariates, in.comparison_covariates);
  auto after = standardized_differences(in.focal_covariates, in.comparison_covariates, &weights);
  return pbr(before, after);
}

}  // namespace detail_diag

// One solve per lambda, warm-started along the grid. Solver failures are
// recorded per row; the sweep itself never throws for them.
inline std::vector<SweepRow> sweep_lambda(const SweepInputs& in, BoundMode bounds,
                                          const std::vector<double>& grid,
                                          const SolverSettings& settings,
                                          bool keep_weights = false) {
  require(!grid.empty(), ErrorKind::Contract, "empty lambda grid");
  std::vector<SweepRow> rows;
  std::optional<WarmStart> warm;
  for (double lambda : grid) {
    SweepRow row;
    row.lambda = lambda;
    try {
      BalanceProblem prob = assemble_problem(in.comparison_design, in.comparison_cluster,
                                             in.target, lambda, bounds, in.mode);
      auto [w, sol] = solve_admm_full(prob, settings, warm);
      warm = WarmStart{sol.x, sol.y};
      row.status = to_string(w.solver_report.status);
      if (w.solver_report.status != SolveStatus::Infeasible) {
        PbrResult p = detail_diag::sweep_pbr(in, w.weights);
        row.pbr = p.value;
        row.pbr_defined = p.defined;
        row.ess = effective_sample_size(w.weights);
        row.imbalance = prob.imbalance(w.weights);
        row.sum_sq_weights = w.weights.squaredNorm();
        if (keep_weights) row.weights = std::move(w);
      }
    } catch (const Error& e) {
      row.status = std::string("error: ") + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cbal
