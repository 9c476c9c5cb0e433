#pragma once

#include <Eigen/Dense>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "cbal/admm.hpp"
#include "cbal/basis.hpp"
#include "cbal/common.hpp"
#include "cbal/dataset.hpp"
#include "cbal/diagnostics.hpp"
#include "cbal/estimators.hpp"
#include "cbal/ipw.hpp"
#include "cbal/target.hpp"

namespace cbal {

// Five independent standard normal covariates; group assignment through a
// thresholded index with an interaction term and uniform noise, overlap
// controlled by c; outcomes Y = 5 G + X2 + X3 + eps with unit normal noise.
struct DgpConfig {
  int n = 1000;
  double c = 10.0;
  std::uint64_t seed = 0;

  void check() const {
    require(n >= 10, ErrorKind::Contract, "DGP needs n >= 10");
    require(c > 0.0, ErrorKind::Contract, "overlap parameter c must be > 0");
  }
};

constexpr double kTrueEffect = 5.0;

inline AnalysisDataset generate_sample(const DgpConfig& cfg) {
  cfg.check();
  auto rng = make_rng(cfg.seed, 0xD6F);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);

  AnalysisDataset ds;
  ds.covariate_names = {"x1", "x2", "x3", "x4", "x5"};
  ds.outcome_names = {"y"};
  ds.covariates.resize(cfg.n, 5);
  ds.outcomes.assign(1, Eigen::VectorXd(cfg.n));
  ds.group.reserve(static_cast<std::size_t>(cfg.n));

  for (int i = 0; i < cfg.n; ++i) {
    double x1 = norm(rng), x2 = norm(rng), x3 = norm(rng), x4 = norm(rng), x5 = norm(rng);
    ds.covariates.row(i) << x1, x2, x3, x4, x5;
    double gstar = (1.5 * x1 + 1.5 * x2 + 0.7 * x1 * x2) / cfg.c + unif(rng);
    int g = gstar > 0.0 ? 1 : 0;
    ds.group.push_back(g);
    double eps = norm(rng);
    ds.outcomes[0](i) = kTrueEffect * g + x2 + x3 + eps;
  }
  return ds;
}

enum class WeightMethod { Ipw, Restricted, Unrestricted };

inline std::string to_string(WeightMethod m) {
  switch (m) {
    case WeightMethod::Ipw: return "ipw";
    case WeightMethod::Restricted: return "restricted";
    case WeightMethod::Unrestricted: return "unrestricted";
  }
  return "unknown";
}

enum class SeMethod { Rve, Hc2 };

inline std::string to_string(SeMethod m) { return m == SeMethod::Rve ? "rve" : "hc2"; }

struct StudyConfig {
  DgpConfig dgp;               // template; c overridden by c_grid entries
  std::vector<double> c_grid = {10.0};
  int replications = 200;
  std::vector<double> lambda_grid;
  std::vector<WeightMethod> methods = {WeightMethod::Ipw, WeightMethod::Restricted,
                                       WeightMethod::Unrestricted};
  std::vector<SeMethod> se_methods = {SeMethod::Rve, SeMethod::Hc2};
  double alpha = 0.05;
  double outcome_ridge_penalty = 1.0;
  SolverSettings solver;

  void check() const {
    dgp.check();
    require(replications >= 1, ErrorKind::Contract, "replications must be >= 1");
    require(!lambda_grid.empty(), ErrorKind::Contract, "lambda grid must be nonempty");
    require(!c_grid.empty(), ErrorKind::Contract, "c grid must be nonempty");
  }
};

namespace detail_sim {

struct SplitData {
  Eigen::MatrixXd focal_x, comparison_x;
  Eigen::VectorXd focal_y, comparison_y;
};

inline SplitData split_groups(const AnalysisDataset& ds) {
  SplitData s;
  auto fr = ds.rows_of_group(1);
  auto cr = ds.rows_of_group(0);
  s.focal_x.resize(static_cast<Eigen::Index>(fr.size()), ds.covariates.cols());
  s.comparison_x.resize(static_cast<Eigen::Index>(cr.size()), ds.covariates.cols());
  s.focal_y.resize(static_cast<Eigen::Index>(fr.size()));
  s.comparison_y.resize(static_cast<Eigen::Index>(cr.size()));
  for (std::size_t i = 0; i < fr.size(); ++i) {
    s.focal_x.row(static_cast<Eigen::Index>(i)) = ds.covariates.row(static_cast<Eigen::Index>(fr[i]));
    s.focal_y(static_cast<Eigen::Index>(i)) = ds.outcomes[0](static_cast<Eigen::Index>(fr[i]));
  }
  for (std::size_t i = 0; i < cr.size(); ++i) {
    s.comparison_x.row(static_cast<Eigen::Index>(i)) = ds.covariates.row(static_cast<Eigen::Index>(cr[i]));
    s.comparison_y(static_cast<Eigen::Index>(i)) = ds.outcomes[0](static_cast<Eigen::Index>(cr[i]));
  }
  return s;
}

inline TargetDistribution focal_target(const SplitData& s) {
  TargetDistribution t;
  t.basis_dim = s.focal_x.cols();
  t.n_focal = static_cast<std::size_t>(s.focal_x.rows());
  t.cluster_mass = {1.0};
  t.within_cluster_means = {s.focal_x.colwise().mean().transpose()};
  t.overall_mean = t.within_cluster_means[0];
  return t;
}

}  // namespace detail_sim

struct DesignStudyRow {
  double c = 0.0;
  double lambda = 0.0;
  std::string method;
  double mean_pbr = 0.0;
  double mean_ess = 0.0;
  int n_excluded = 0;
};

// Per-replication metric curves, used by property checks on the
// bias-variance dial.
struct ReplicationTrace {
  double c = 0.0;
  int replication = 0;
  std::string method;
  std::vector<double> lambda;
  std::vector<double> pbr;
  std::vector<double> ess;
  std::vector<double> imbalance;
  std::vector<double> sum_sq_weights;
};

struct DesignStudyResult {
  std::vector<DesignStudyRow> rows;
  std::vector<ReplicationTrace> traces;  // balancing methods only
};

// Study 1: design metrics (PBR / ESS) by method and lambda, averaged over
// replications. Balancing weights run in unclustered approximate-balance
// mode; IPW is constant in lambda and reported once per grid point.
inline DesignStudyResult run_design_study(const StudyConfig& cfg, int threads = 1,
                                          bool keep_traces = false) {
  cfg.check();
  const int R = cfg.replications;
  const std::size_t L = cfg.lambda_grid.size();

  struct RepOutcome {
    // per method: per lambda (pbr, ess); NaN marks a failed replication
    std::map<std::string, std::vector<std::array<double, 4>>> curves;
  };

  DesignStudyResult result;
  for (double c : cfg.c_grid) {
    std::vector<RepOutcome> reps(static_cast<std::size_t>(R));
    parallel_for(static_cast<std::size_t>(R), threads, [&](std::size_t r) {
      DgpConfig dgp = cfg.dgp;
      dgp.c = c;
      dgp.seed = splitmix64(cfg.dgp.seed ^ (0x5111ULL + r));
      AnalysisDataset ds = generate_sample(dgp);
      auto s = detail_sim::split_groups(ds);
      TargetDistribution target = detail_sim::focal_target(s);

      RepOutcome& out = reps[r];
      for (WeightMethod m : cfg.methods) {
        auto& curve = out.curves[to_string(m)];
        curve.assign(L, {std::nan(""), std::nan(""), std::nan(""), std::nan("")});
        if (m == WeightMethod::Ipw) {
          try {
            WeightVector w = fit_ipw_logistic(ds);
            auto before = standardized_differences(s.focal_x, s.comparison_x);
            auto after = standardized_differences(s.focal_x, s.comparison_x, &w.weights);
            PbrResult p = pbr(before, after);
            double ess = effective_sample_size(w.weights);
            for (std::size_t k = 0; k < L; ++k)
              curve[k] = {p.defined ? p.value : std::nan(""), ess, 0.0, w.weights.squaredNorm()};
          } catch (const Error&) {
            // excluded; counted below
          }
          continue;
        }
        BoundMode bounds = m == WeightMethod::Restricted ? BoundMode::Restricted
                                                         : BoundMode::Unrestricted;
        SweepInputs in;
        in.comparison_design = s.comparison_x;
        in.target = target;
        in.mode = BalanceMode::Unclustered;
        in.focal_covariates = s.focal_x;
        in.comparison_covariates = s.comparison_x;
        auto sweep = sweep_lambda(in, bounds, cfg.lambda_grid, cfg.solver);
        for (std::size_t k = 0; k < L; ++k) {
          const SweepRow& row = sweep[k];
          if (row.status == "solved" && row.pbr_defined)
            curve[k] = {row.pbr, row.ess, row.imbalance, row.sum_sq_weights};
        }
      }
    });

    for (WeightMethod m : cfg.methods) {
      std::string name = to_string(m);
      for (std::size_t k = 0; k < L; ++k) {
        DesignStudyRow row;
        row.c = c;
        row.lambda = cfg.lambda_grid[k];
        row.method = name;
        int used = 0;
        for (int r = 0; r < R; ++r) {
          const auto& curve = reps[static_cast<std::size_t>(r)].curves.at(name);
          if (std::isnan(curve[k][0])) continue;
          row.mean_pbr += curve[k][0];
          row.mean_ess += curve[k][1];
          ++used;
        }
        row.n_excluded = R - used;
        if (used > 0) {
          row.mean_pbr /= used;
          row.mean_ess /= used;
        }
        result.rows.push_back(std::move(row));
      }
      if (keep_traces && m != WeightMethod::Ipw) {
        for (int r = 0; r < R; ++r) {
          const auto& curve = reps[static_cast<std::size_t>(r)].curves.at(name);
          ReplicationTrace tr;
          tr.c = c;
          tr.replication = r;
          tr.method = name;
          bool complete = true;
          for (std::size_t k = 0; k < L; ++k) {
            if (std::isnan(curve[k][0])) {
              complete = false;
              break;
            }
            tr.lambda.push_back(cfg.lambda_grid[k]);
            tr.pbr.push_back(curve[k][0]);
            tr.ess.push_back(curve[k][1]);
            tr.imbalance.push_back(curve[k][2]);
            tr.sum_sq_weights.push_back(curve[k][3]);
          }
          if (complete) result.traces.push_back(std::move(tr));
        }
      }
    }
  }
  return result;
}

struct InferenceStudyRow {
  double c = 0.0;
  double lambda = 0.0;
  std::string se_method;
  double mean_bias = 0.0;
  double mean_se = 0.0;
  double coverage = 0.0;
  double mc_se = 0.0;  // binomial MC standard error of the coverage estimate
  int n_excluded = 0;
};

// Study 2: size and coverage of RVE vs HC2 intervals around the true effect,
// restricted weights only.
inline std::vector<InferenceStudyRow> run_inference_study(const StudyConfig& cfg,
                                                          int threads = 1) {
  cfg.check();
  const int R = cfg.replications;
  const std::size_t L = cfg.lambda_grid.size();

  struct RepRow {
    std::vector<double> bias_rve, se_rve, bias_hc2, se_hc2;  // per lambda
    std::vector<int> cover_rve, cover_hc2;
    std::vector<int> ok;
  };
  std::vector<RepRow> reps(static_cast<std::size_t>(R));

  std::vector<InferenceStudyRow> rows;
  for (double c : cfg.c_grid) {
    parallel_for(static_cast<std::size_t>(R), threads, [&](std::size_t r) {
      RepRow& out = reps[r];
      out = RepRow{};
      out.bias_rve.assign(L, 0.0);
      out.se_rve.assign(L, 0.0);
      out.bias_hc2.assign(L, 0.0);
      out.se_hc2.assign(L, 0.0);
      out.cover_rve.assign(L, 0);
      out.cover_hc2.assign(L, 0);
      out.ok.assign(L, 0);

      DgpConfig dgp = cfg.dgp;
      dgp.c = c;
      dgp.seed = splitmix64(cfg.dgp.seed ^ (0xA212ULL + r));
      AnalysisDataset ds = generate_sample(dgp);
      auto s = detail_sim::split_groups(ds);
      TargetDistribution target = detail_sim::focal_target(s);
      MeanVar focal = focal_mean_var(s.focal_y);
      double z = normal_quantile(1.0 - cfg.alpha / 2.0);

      std::optional<WarmStart> warm;
      for (std::size_t k = 0; k < L; ++k) {
        try {
          BalanceProblem prob =
              assemble_problem(s.comparison_x, {}, target, cfg.lambda_grid[k],
                               BoundMode::Restricted, BalanceMode::Unclustered);
          auto [w, sol] = solve_admm_full(prob, cfg.solver, warm);
          warm = WarmStart{sol.x, sol.y};
          if (w.solver_report.status == SolveStatus::Infeasible) continue;

          WeightedMean wm = weighted_mean(w.weights, s.comparison_y);
          double point = focal.mean - wm.value;

          OutcomeModelFit fit = fit_outcome_model(s.comparison_x, {}, s.comparison_y, w.weights,
                                                  cfg.outcome_ridge_penalty);
          double v_rve = rve_variance(w.weights, s.comparison_y, fit);
          Hc2Variance hc2 = hc2_variance(w.weights, s.focal_y, s.comparison_y);

          double se_rve = std::sqrt(focal.var + v_rve);
          double se_hc2 = std::sqrt(hc2.v_focal + hc2.v_comparison);
          out.bias_rve[k] = point - kTrueEffect;
          out.bias_hc2[k] = point - kTrueEffect;
          out.se_rve[k] = se_rve;
          out.se_hc2[k] = se_hc2;
          out.cover_rve[k] = std::abs(point - kTrueEffect) <= z * se_rve ? 1 : 0;
          out.cover_hc2[k] = std::abs(point - kTrueEffect) <= z * se_hc2 ? 1 : 0;
          out.ok[k] = 1;
        } catch (const Error&) {
          // excluded; counted below
        }
      }
    });

    for (std::size_t k = 0; k < L; ++k) {
      for (SeMethod m : cfg.se_methods) {
        InferenceStudyRow row;
        row.c = c;
        row.lambda = cfg.lambda_grid[k];
        row.se_method = to_string(m);
        int used = 0;
        double cover = 0.0;
        for (int r = 0; r < R; ++r) {
          const RepRow& rep = reps[static_cast<std::size_t>(r)];
          if (!rep.ok[k]) continue;
          ++used;
          if (m == SeMethod::Rve) {
            row.mean_bias += rep.bias_rve[k];
            row.mean_se += rep.se_rve[k];
            cover += rep.cover_rve[k];
          } else {
            row.mean_bias += rep.bias_hc2[k];
            row.mean_se += rep.se_hc2[k];
            cover += rep.cover_hc2[k];
          }
        }
        row.n_excluded = R - used;
        if (used > 0) {
          row.mean_bias /= used;
          row.mean_se /= used;
          row.coverage = cover / used;
          row.mc_se = std::sqrt(std::max(0.0, row.coverage * (1.0 - row.coverage) /
                                                  static_cast<double>(used)));
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace cbal
