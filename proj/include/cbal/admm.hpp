#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <vector>

#include "cbal/common.hpp"
#include "cbal/qp.hpp"
#include "cbal/weights.hpp"

namespace cbal {

struct SolverSettings {
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;  // over-relaxation, [1,2)
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double eps_pinf = 1e-5;
  int max_iter = 20000;
  bool polish = true;
  bool adaptive_rho = true;
  int check_interval = 25;
  int scaling_iters = 10;
  bool verbose = false;

  void check() const {
    require(eps_abs > 0 && eps_rel > 0, ErrorKind::Contract, "tolerances must be > 0");
    require(max_iter >= 1, ErrorKind::Contract, "max_iter must be >= 1");
    require(alpha >= 1.0 && alpha < 2.0, ErrorKind::Contract, "alpha must be in [1,2)");
    require(rho > 0 && sigma > 0, ErrorKind::Contract, "penalty parameters must be > 0");
  }
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // constraint duals
  Eigen::VectorXd z;  // constraint values
  SolveStatus status = SolveStatus::Solved;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct WarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

// Operator-splitting QP solver for  min 1/2 x'Px + q'x  s.t. l <= Ax <= u.
// Splitting, scaling, residual-balancing rho updates, and the polish step
// follow the OSQP scheme; the KKT system is factored with a sparse LDL').
namespace detail_admm {

struct Scaling {
  Eigen::VectorXd d;  // variable scaling
  Eigen::VectorXd e;  // constraint scaling
  double c = 1.0;     // cost scaling
};

inline Eigen::VectorXd col_inf_norms(const Eigen::SparseMatrix<double>& m) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.cols());
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      out(it.col()) = std::max(out(it.col()), std::abs(it.value()));
  return out;
}

inline Eigen::VectorXd row_inf_norms(const Eigen::SparseMatrix<double>& m) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      out(it.row()) = std::max(out(it.row()), std::abs(it.value()));
  return out;
}

inline void scale_rows(Eigen::SparseMatrix<double>& m, const Eigen::VectorXd& s) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      it.valueRef() *= s(it.row());
}

inline void scale_cols(Eigen::SparseMatrix<double>& m, const Eigen::VectorXd& s) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      it.valueRef() *= s(it.col());
}

}  // namespace detail_admm

class OsqpSolver {
 public:
  OsqpSolver(Eigen::SparseMatrix<double> P, Eigen::VectorXd q, Eigen::SparseMatrix<double> A,
             Eigen::VectorXd lower, Eigen::VectorXd upper, SolverSettings settings)
      : P_(std::move(P)),
        q_(std::move(q)),
        A_(std::move(A)),
        l_(std::move(lower)),
        u_(std::move(upper)),
        s_(settings) {
    s_.check();
    nx_ = static_cast<int>(P_.rows());
    m_ = static_cast<int>(A_.rows());
    ruiz_scale();
    rho_ = s_.rho;
    build_rho_vec();
    assemble_kkt(true);
  }

  QpSolution solve(const std::optional<WarmStart>& warm = std::nullopt) {
    using Eigen::VectorXd;
    VectorXd x = VectorXd::Zero(nx_), z = VectorXd::Zero(m_), y = VectorXd::Zero(m_);
    if (warm) {
      x = scale_.d.cwiseInverse().cwiseProduct(warm->x);
      VectorXd yw = warm->y;
      y = scale_.c * scale_.e.cwiseInverse().cwiseProduct(yw);
      z = As_ * x;
    }

    QpSolution sol;
    VectorXd y_prev_unscaled = unscale_y(y);
    VectorXd rhs(nx_ + m_), xz(nx_ + m_);
    double rp = kInf, rd = kInf, sp = 0, sd = 0;
    double stall_rp = kInf;
    int iter = 0;
    for (iter = 1; iter <= s_.max_iter; ++iter) {
      rhs.head(nx_) = s_.sigma * x - qs_;
      rhs.tail(m_) = z - y.cwiseQuotient(rho_vec_);
      xz = ldlt_.solve(rhs);
      VectorXd xt = xz.head(nx_);
      VectorXd zt = z + (xz.tail(m_) - y).cwiseQuotient(rho_vec_);

      x = s_.alpha * xt + (1.0 - s_.alpha) * x;
      VectorXd w = s_.alpha * zt + (1.0 - s_.alpha) * z + y.cwiseQuotient(rho_vec_);
      z = w.cwiseMax(ls_).cwiseMin(us_);
      y = rho_vec_.cwiseProduct(w - z);

      if (iter % s_.check_interval == 0 || iter == s_.max_iter) {
        residuals(x, z, y, rp, rd, sp, sd);
        if (s_.verbose && iter % (40 * s_.check_interval) == 0)
          std::fprintf(stderr, "iter %6d rho %.3e rp %.3e rd %.3e\n", iter, rho_, rp, rd);
        if (rp <= s_.eps_abs + s_.eps_rel * sp && rd <= s_.eps_abs + s_.eps_rel * sd) {
          sol.status = SolveStatus::Solved;
          break;
        }
        VectorXd y_now = unscale_y(y);
        if (primal_infeasible(y_now - y_prev_unscaled)) {
          sol.status = SolveStatus::Infeasible;
          break;
        }
        y_prev_unscaled = y_now;
        if (s_.adaptive_rho && iter % (4 * s_.check_interval) == 0) maybe_update_rho(rp, rd, sp, sd, x, z, y);
        // Degenerate active sets can leave a glacial primal tail; a polish
        // attempt resolves them exactly, gated on recomputed residuals.
        if (s_.polish && iter % (80 * s_.check_interval) == 0) {
          if (rp > 0.9 * stall_rp) {
            QpSolution cand;
            cand.x = scale_.d.cwiseProduct(x);
            cand.z = scale_.e.cwiseInverse().cwiseProduct(z);
            cand.y = unscale_y(y);
            polish(cand);
            Eigen::VectorXd ax = A_ * cand.x;
            Eigen::VectorXd aty = A_.transpose() * cand.y;
            Eigen::VectorXd px = P_ * cand.x;
            double rp2 = (ax - cand.z).lpNorm<Eigen::Infinity>();
            double rd2 = (px + q_ + aty).lpNorm<Eigen::Infinity>();
            double sp2 = std::max(ax.lpNorm<Eigen::Infinity>(), cand.z.lpNorm<Eigen::Infinity>());
            double sd2 = std::max({px.lpNorm<Eigen::Infinity>(), q_.lpNorm<Eigen::Infinity>(),
                                   aty.lpNorm<Eigen::Infinity>()});
            if (s_.verbose)
              std::fprintf(stderr, "  stall polish at %d: rp %.3e rd %.3e\n", iter, rp2, rd2);
            if (rp2 <= s_.eps_abs + s_.eps_rel * sp2 && rd2 <= s_.eps_abs + s_.eps_rel * sd2) {
              cand.status = SolveStatus::Solved;
              cand.iterations = iter;
              cand.primal_residual = rp2;
              cand.dual_residual = rd2;
              return cand;
            }
          }
          stall_rp = rp;
        }
      }
    }
    if (iter > s_.max_iter) {
      iter = s_.max_iter;
      sol.status = SolveStatus::MaxIter;
    }

    sol.x = scale_.d.cwiseProduct(x);
    sol.z = scale_.e.cwiseInverse().cwiseProduct(z);
    sol.y = unscale_y(y);
    sol.iterations = iter;
    if (s_.polish && sol.status != SolveStatus::Infeasible) polish(sol);
    unscaled_residuals(sol);
    if (sol.status == SolveStatus::MaxIter) {
      // Accept a salvage polish only if the refined iterate actually meets
      // the tolerances on independently recomputed residuals.
      Eigen::VectorXd ax = A_ * sol.x;
      double sp2 = std::max(ax.lpNorm<Eigen::Infinity>(), sol.z.lpNorm<Eigen::Infinity>());
      Eigen::VectorXd px = P_ * sol.x;
      Eigen::VectorXd aty = A_.transpose() * sol.y;
      double sd2 = std::max({px.lpNorm<Eigen::Infinity>(), q_.lpNorm<Eigen::Infinity>(),
                             aty.lpNorm<Eigen::Infinity>()});
      if (sol.primal_residual <= s_.eps_abs + s_.eps_rel * sp2 &&
          sol.dual_residual <= s_.eps_abs + s_.eps_rel * sd2)
        sol.status = SolveStatus::Solved;
    }
    return sol;
  }

 private:
  void ruiz_scale() {
    using Eigen::VectorXd;
    Ps_ = P_;
    As_ = A_;
    qs_ = q_;
    ls_ = l_;
    us_ = u_;
    scale_.d = VectorXd::Ones(nx_);
    scale_.e = VectorXd::Ones(m_);
    scale_.c = 1.0;
    for (int it = 0; it < s_.scaling_iters; ++it) {
      VectorXd cp = detail_admm::col_inf_norms(Ps_);
      VectorXd ca = detail_admm::col_inf_norms(As_);
      VectorXd dx(nx_);
      for (int i = 0; i < nx_; ++i) {
        double nrm = std::max(cp(i), ca(i));
        dx(i) = nrm > 1e-12 ? 1.0 / std::sqrt(nrm) : 1.0;
      }
      VectorXd ra = detail_admm::row_inf_norms(As_);
      VectorXd de(m_);
      for (int j = 0; j < m_; ++j) de(j) = ra(j) > 1e-12 ? 1.0 / std::sqrt(ra(j)) : 1.0;

      detail_admm::scale_rows(Ps_, dx);
      detail_admm::scale_cols(Ps_, dx);
      qs_ = dx.cwiseProduct(qs_);
      detail_admm::scale_rows(As_, de);
      detail_admm::scale_cols(As_, dx);
      for (int j = 0; j < m_; ++j) {
        if (std::isfinite(ls_(j))) ls_(j) *= de(j);
        if (std::isfinite(us_(j))) us_(j) *= de(j);
      }
      scale_.d = scale_.d.cwiseProduct(dx);
      scale_.e = scale_.e.cwiseProduct(de);

      double mean_col = detail_admm::col_inf_norms(Ps_).mean();
      double denom = std::max(mean_col, qs_.lpNorm<Eigen::Infinity>());
      double g = denom > 1e-12 ? 1.0 / denom : 1.0;
      Ps_ *= g;
      qs_ *= g;
      scale_.c *= g;
    }
  }

  void build_rho_vec() {
    rho_vec_.resize(m_);
    for (int j = 0; j < m_; ++j) {
      bool eq = std::isfinite(ls_(j)) && std::isfinite(us_(j)) && (u_(j) - l_(j)) < 1e-14;
      rho_vec_(j) = eq ? rho_ * 1e3 : rho_;
    }
  }

  void assemble_kkt(bool analyze) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(Ps_.nonZeros() + As_.nonZeros() + nx_ + m_));
    for (int k = 0; k < Ps_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(Ps_, k); it; ++it)
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < nx_; ++i) trip.emplace_back(i, i, s_.sigma);
    for (int k = 0; k < As_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(As_, k); it; ++it) {
        trip.emplace_back(nx_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        trip.emplace_back(static_cast<int>(it.col()), nx_ + static_cast<int>(it.row()), it.value());
      }
    for (int j = 0; j < m_; ++j) trip.emplace_back(nx_ + j, nx_ + j, -1.0 / rho_vec_(j));
    kkt_.resize(nx_ + m_, nx_ + m_);
    kkt_.setFromTriplets(trip.begin(), trip.end());
    if (analyze) ldlt_.analyzePattern(kkt_);
    ldlt_.factorize(kkt_);
    require(ldlt_.info() == Eigen::Success, ErrorKind::Numeric, "KKT factorization failed");
  }

  Eigen::VectorXd unscale_y(const Eigen::VectorXd& y) const {
    return scale_.e.cwiseProduct(y) / scale_.c;
  }

  // Residuals of the unscaled problem.
  void residuals(const Eigen::VectorXd& xs, const Eigen::VectorXd& zs, const Eigen::VectorXd& ys,
                 double& rp, double& rd, double& sp, double& sd) const {
    Eigen::VectorXd x = scale_.d.cwiseProduct(xs);
    Eigen::VectorXd z = scale_.e.cwiseInverse().cwiseProduct(zs);
    Eigen::VectorXd y = unscale_y(ys);
    Eigen::VectorXd ax = A_ * x;
    Eigen::VectorXd px = P_ * x;
    Eigen::VectorXd aty = A_.transpose() * y;
    rp = (ax - z).lpNorm<Eigen::Infinity>();
    sp = std::max(ax.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>());
    rd = (px + q_ + aty).lpNorm<Eigen::Infinity>();
    sd = std::max({px.lpNorm<Eigen::Infinity>(), q_.lpNorm<Eigen::Infinity>(),
                   aty.lpNorm<Eigen::Infinity>()});
  }

  void unscaled_residuals(QpSolution& sol) const {
    Eigen::VectorXd ax = A_ * sol.x;
    sol.primal_residual = (ax - sol.z).lpNorm<Eigen::Infinity>();
    sol.dual_residual = (P_ * sol.x + q_ + A_.transpose() * sol.y).lpNorm<Eigen::Infinity>();
  }

  bool primal_infeasible(const Eigen::VectorXd& dy) const {
    double norm = dy.lpNorm<Eigen::Infinity>();
    if (norm < 1e-12) return false;
    Eigen::VectorXd atdy = A_.transpose() * dy;
    if (atdy.lpNorm<Eigen::Infinity>() > s_.eps_pinf * norm) return false;
    double support = 0.0;
    for (int j = 0; j < m_; ++j) {
      if (dy(j) > 0) {
        if (!std::isfinite(u_(j))) {
          if (dy(j) > s_.eps_pinf * norm) return false;
        } else {
          support += u_(j) * dy(j);
        }
      } else if (dy(j) < 0) {
        if (!std::isfinite(l_(j))) {
          if (-dy(j) > s_.eps_pinf * norm) return false;
        } else {
          support += l_(j) * dy(j);
        }
      }
    }
    return support < -s_.eps_pinf * norm;
  }

  void maybe_update_rho(double rp, double rd, double sp, double sd, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& z, Eigen::VectorXd& y) {
    double num = rp / std::max(sp, 1e-12);
    double den = rd / std::max(sd, 1e-12);
    if (num < 1e-15 || den < 1e-15) return;
    // The equality rows already run at 1e3 * rho; capping the base keeps the
    // KKT matrix factorable at double precision.
    double new_rho = std::clamp(rho_ * std::sqrt(num / den), 1e-6, 1e3);
    if (new_rho > 5.0 * rho_ || new_rho < rho_ / 5.0) {
      rho_ = new_rho;
      build_rho_vec();
      assemble_kkt(false);
      (void)x;
      (void)z;
      (void)y;
    }
  }

  // Equality-system refinement on the active set identified at convergence.
  // With lambda = 0 the active KKT system can be singular; refinement then
  // drifts along its null space, so every refinement stage is scored on the
  // true residuals and the best stage wins.
  void polish(QpSolution& sol) const {
    constexpr double delta = 1e-11;
    std::vector<int> active;
    std::vector<double> rhs_act;
    for (int j = 0; j < m_; ++j) {
      bool eq = std::isfinite(l_(j)) && std::isfinite(u_(j)) && (u_(j) - l_(j)) < 1e-14;
      double tol_act = 1e-7 * (1.0 + std::abs(sol.z(j)));
      if (eq) {
        active.push_back(j);
        rhs_act.push_back(l_(j));
      } else if (std::isfinite(l_(j)) && (sol.y(j) < 0 || sol.z(j) - l_(j) < tol_act)) {
        active.push_back(j);
        rhs_act.push_back(l_(j));
      } else if (std::isfinite(u_(j)) && (sol.y(j) > 0 || u_(j) - sol.z(j) < tol_act)) {
        active.push_back(j);
        rhs_act.push_back(u_(j));
      }
    }
    const int ma = static_cast<int>(active.size());
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < P_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(P_, k); it; ++it)
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < nx_; ++i) trip.emplace_back(i, i, delta);
    std::vector<int> row_of(static_cast<std::size_t>(m_), -1);
    for (int a = 0; a < ma; ++a) row_of[static_cast<std::size_t>(active[a])] = a;
    for (int k = 0; k < A_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(A_, k); it; ++it) {
        int a = row_of[static_cast<std::size_t>(it.row())];
        if (a < 0) continue;
        trip.emplace_back(nx_ + a, static_cast<int>(it.col()), it.value());
        trip.emplace_back(static_cast<int>(it.col()), nx_ + a, it.value());
      }
    for (int a = 0; a < ma; ++a) trip.emplace_back(nx_ + a, nx_ + a, -delta);

    Eigen::SparseMatrix<double> kp(nx_ + ma, nx_ + ma);
    kp.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fac;
    fac.compute(kp);
    if (fac.info() != Eigen::Success) return;

    Eigen::VectorXd rhs(nx_ + ma);
    rhs.head(nx_) = -q_;
    for (int a = 0; a < ma; ++a) rhs(nx_ + a) = rhs_act[static_cast<std::size_t>(a)];

    double best = kInf;
    Eigen::VectorXd best_x, best_y, best_z;
    auto consider = [&](const Eigen::VectorXd& xy) {
      Eigen::VectorXd x_new = xy.head(nx_);
      Eigen::VectorXd y_new = Eigen::VectorXd::Zero(m_);
      for (int a = 0; a < ma; ++a) y_new(active[a]) = xy(nx_ + a);
      Eigen::VectorXd ax = A_ * x_new;
      Eigen::VectorXd z_new = ax.cwiseMax(l_).cwiseMin(u_);
      double rp_new = (ax - z_new).lpNorm<Eigen::Infinity>();
      double rd_new = (P_ * x_new + q_ + A_.transpose() * y_new).lpNorm<Eigen::Infinity>();
      double score = std::max(rp_new, rd_new);
      if (score < best) {
        best = score;
        best_x = std::move(x_new);
        best_y = std::move(y_new);
        best_z = std::move(z_new);
      }
    };

    Eigen::VectorXd sol_xy = fac.solve(rhs);
    consider(sol_xy);
    for (int it = 0; it < 3; ++it) {
      Eigen::VectorXd resid = rhs - kp * sol_xy;
      resid.head(nx_) += delta * sol_xy.head(nx_);
      resid.tail(ma) -= delta * sol_xy.tail(ma);
      sol_xy += fac.solve(resid);
      consider(sol_xy);
    }

    double rp_old = (A_ * sol.x - sol.z).lpNorm<Eigen::Infinity>();
    double rd_old = (P_ * sol.x + q_ + A_.transpose() * sol.y).lpNorm<Eigen::Infinity>();
    if (s_.verbose)
      std::fprintf(stderr, "  polish: %d active, best %.3e vs old %.3e\n", ma, best,
                   std::max(rp_old, rd_old));
    if (best < std::max(rp_old, rd_old)) {
      sol.x = std::move(best_x);
      sol.y = std::move(best_y);
      sol.z = std::move(best_z);
    }
  }

  Eigen::SparseMatrix<double> P_, A_;      // unscaled
  Eigen::VectorXd q_, l_, u_;              // unscaled
  Eigen::SparseMatrix<double> Ps_, As_;    // scaled
  Eigen::VectorXd qs_, ls_, us_;           // scaled
  detail_admm::Scaling scale_;
  Eigen::SparseMatrix<double> kkt_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  Eigen::VectorXd rho_vec_;
  double rho_ = 0.1;
  SolverSettings s_;
  int nx_ = 0, m_ = 0;
};

// KKT residuals of a candidate gamma for the balance problem, measured on the
// original (gamma, r) formulation.
inline void balance_kkt_residuals(const BalanceProblem& prob, const QpSolution& sol,
                                  SolverReport& report) {
  const Eigen::VectorXd& x = sol.x;
  Eigen::VectorXd ax = prob.A * x;
  double feas = 0.0, comp = 0.0;
  for (int j = 0; j < prob.m(); ++j) {
    double low = prob.lower(j), up = prob.upper(j);
    double v = ax(j);
    if (std::isfinite(low)) feas = std::max(feas, low - v);
    if (std::isfinite(up)) feas = std::max(feas, v - up);
    bool eq = std::isfinite(low) && std::isfinite(up) && (up - low) < 1e-14;
    if (!eq) {
      double y = sol.y(j);
      if (y < 0 && std::isfinite(low)) comp = std::max(comp, std::abs(y * (v - low)));
      if (y > 0 && std::isfinite(up)) comp = std::max(comp, std::abs(y * (up - v)));
    }
  }
  report.kkt_stationarity =
      (prob.P * x + prob.q + prob.A.transpose() * sol.y).lpNorm<Eigen::Infinity>();
  report.kkt_feasibility = feas;
  report.kkt_complementarity = comp;
}

inline WeightVector solve_admm(const BalanceProblem& prob, const SolverSettings& settings,
                               const std::optional<WarmStart>& warm = std::nullopt) {
  OsqpSolver solver(prob.P, prob.q, prob.A, prob.lower, prob.upper, settings);
  QpSolution sol = solver.solve(warm);

  WeightVector w;
  w.weights = sol.x.head(prob.n_weights);
  w.bound_mode = prob.bounds;
  w.lambda = prob.lambda;
  w.cluster_mass = prob.cluster_mass;
  w.n_focal = prob.n_focal;
  w.solver_report.status = sol.status;
  w.solver_report.iterations = sol.iterations;
  w.solver_report.primal_residual = sol.primal_residual;
  w.solver_report.dual_residual = sol.dual_residual;
  if (prob.lambda == 0.0) {
    w.solver_report.possibly_nonunique = true;
    w.solver_report.note = "lambda = 0: solution may not be unique";
  }
  balance_kkt_residuals(prob, sol, w.solver_report);
  return w;
}

// Full solution variant for callers that warm-start the next solve.
inline std::pair<WeightVector, QpSolution> solve_admm_full(
    const BalanceProblem& prob, const SolverSettings& settings,
    const std::optional<WarmStart>& warm = std::nullopt) {
  OsqpSolver solver(prob.P, prob.q, prob.A, prob.lower, prob.upper, settings);
  QpSolution sol = solver.solve(warm);
  WeightVector w;
  w.weights = sol.x.head(prob.n_weights);
  w.bound_mode = prob.bounds;
  w.lambda = prob.lambda;
  w.cluster_mass = prob.cluster_mass;
  w.n_focal = prob.n_focal;
  w.solver_report.status = sol.status;
  w.solver_report.iterations = sol.iterations;
  w.solver_report.primal_residual = sol.primal_residual;
  w.solver_report.dual_residual = sol.dual_residual;
  if (prob.lambda == 0.0) {
    w.solver_report.possibly_nonunique = true;
    w.solver_report.note = "lambda = 0: solution may not be unique";
  }
  balance_kkt_residuals(prob, sol, w.solver_report);
  return {std::move(w), std::move(sol)};
}

}  // namespace cbal
