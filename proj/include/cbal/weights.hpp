#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cbal/common.hpp"

namespace cbal {

enum class BoundMode { Restricted, Unrestricted };

inline std::string to_string(BoundMode m) {
  return m == BoundMode::Restricted ? "restricted" : "unrestricted";
}

enum class SolveStatus { Solved, MaxIter, Infeasible };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

struct SolverReport {
  SolveStatus status = SolveStatus::Solved;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  // KKT residuals of the returned iterate, measured independently of the
  // iteration path: stationarity, primal feasibility, complementary slackness.
  double kkt_stationarity = 0.0;
  double kkt_feasibility = 0.0;
  double kkt_complementarity = 0.0;
  bool possibly_nonunique = false;  // lambda == 0 with box constraints
  std::string note;
};

// Comparison-group weights on the probability scale: in clustered mode the
// weights in cluster j sum to the target mass P*(H=j); in total they sum to 1
// (unclustered solves reach this only approximately). Count-scale views
// multiply by the focal count.
struct WeightVector {
  Eigen::VectorXd weights;            // per comparison row
  BoundMode bound_mode = BoundMode::Restricted;
  double lambda = 0.0;
  std::vector<double> cluster_mass;   // target per-cluster sums (probability scale)
  std::size_t n_focal = 0;            // probability -> count scale factor
  SolverReport solver_report;

  Eigen::Index size() const { return weights.size(); }

  Eigen::VectorXd count_scale() const {
    require(n_focal > 0, ErrorKind::Contract, "count scale undefined without a focal count");
    return weights * static_cast<double>(n_focal);
  }
};

}  // namespace cbal
