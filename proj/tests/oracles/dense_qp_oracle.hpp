#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

// Test-only oracle: solves the reduced balance QP
//   min ||B g - t||^2 + lambda ||g||^2   s.t.  E g = b,  (g >= 0 if nonneg)
// densely, with a primal-dual active-set loop for the bound-constrained case
// and a single saddle-point solve otherwise. Independent of the production
// operator-splitting path: no auxiliary variables, no scaling, dense algebra.
namespace dense_qp_oracle {

struct Result {
  Eigen::VectorXd gamma;
  double kkt_residual = 0.0;  // self-check; callers should assert it is tiny
};

inline Eigen::VectorXd saddle_solve(const Eigen::MatrixXd& q, const Eigen::VectorXd& c,
                                    const Eigen::MatrixXd& e, const Eigen::VectorXd& b,
                                    const std::vector<int>& free_idx, Eigen::VectorXd* nu_out) {
  const int nf = static_cast<int>(free_idx.size());
  const int me = static_cast<int>(e.rows());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + me, nf + me);
  Eigen::VectorXd rhs(nf + me);
  for (int a = 0; a < nf; ++a) {
    for (int bb = 0; bb < nf; ++bb) kkt(a, bb) = q(free_idx[(std::size_t)a], free_idx[(std::size_t)bb]);
    for (int r = 0; r < me; ++r) {
      kkt(a, nf + r) = -e(r, free_idx[(std::size_t)a]);
      kkt(nf + r, a) = e(r, free_idx[(std::size_t)a]);
    }
    rhs(a) = -c(free_idx[(std::size_t)a]);
  }
  rhs.tail(me) = b;
  Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
  if (nu_out) *nu_out = sol.tail(me);
  return sol.head(nf);
}

inline Result solve(const Eigen::MatrixXd& bmat, const Eigen::VectorXd& t, double lambda,
                    const Eigen::MatrixXd& e, const Eigen::VectorXd& b, bool nonneg) {
  const int n = static_cast<int>(bmat.cols());
  Eigen::MatrixXd q = bmat.transpose() * bmat;
  q.diagonal().array() += lambda;
  Eigen::VectorXd c = -bmat.transpose() * t;

  Result res;
  res.gamma = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(e.rows());

  std::vector<bool> active(static_cast<std::size_t>(n), false);
  auto resolve = [&](const std::vector<bool>& act) {
    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i)
      if (!act[(std::size_t)i]) free_idx.push_back(i);
    Eigen::VectorXd gf = saddle_solve(q, c, e, b, free_idx, &nu);
    res.gamma.setZero();
    for (std::size_t a = 0; a < free_idx.size(); ++a) res.gamma(free_idx[a]) = gf((Eigen::Index)a);
    if (e.rows() > 0 && (e * res.gamma - b).lpNorm<Eigen::Infinity>() > 1e-8)
      throw std::runtime_error("oracle hit an infeasible active set");
    Eigen::VectorXd grad = q * res.gamma + c - e.transpose() * nu;
    mu.setZero();
    for (int i = 0; i < n; ++i)
      if (act[(std::size_t)i]) mu(i) = grad(i);
  };

  if (!nonneg) {
    resolve(active);
  } else {
    // Phase 1: all-at-once active-set updates (fast, usually settles).
    bool settled = false;
    for (int sweep = 0; sweep < 100; ++sweep) {
      resolve(active);
      std::vector<bool> next(static_cast<std::size_t>(n), false);
      for (int i = 0; i < n; ++i) next[(std::size_t)i] = (res.gamma(i) - mu(i)) < -1e-12;
      if (next == active) {
        settled = true;
        break;
      }
      active = next;
    }
    // Phase 2: flip only the most violated index per step.
    if (!settled) {
      active.assign(static_cast<std::size_t>(n), false);
      for (int step = 0; step < 4000; ++step) {
        resolve(active);
        int worst = -1;
        double v = 1e-12;
        for (int i = 0; i < n; ++i) {
          double viol = active[(std::size_t)i] ? -mu(i) : -res.gamma(i);
          if (viol > v) {
            v = viol;
            worst = i;
          }
        }
        if (worst < 0) break;
        active[(std::size_t)worst] = !active[(std::size_t)worst];
        if (step == 3999) throw std::runtime_error("oracle single-flip loop did not settle");
      }
    }
  }

  // Self-check KKT residuals.
  Eigen::VectorXd grad = q * res.gamma + c - e.transpose() * nu - (nonneg ? mu : Eigen::VectorXd::Zero(n));
  double r = grad.lpNorm<Eigen::Infinity>();
  if (e.rows() > 0) r = std::max(r, (e * res.gamma - b).lpNorm<Eigen::Infinity>());
  if (nonneg) {
    r = std::max(r, std::max(0.0, -res.gamma.minCoeff()));
    r = std::max(r, std::max(0.0, -mu.minCoeff()));
    r = std::max(r, res.gamma.cwiseProduct(mu).cwiseAbs().maxCoeff());
  }
  res.kkt_residual = r;
  return res;
}

}  // namespace dense_qp_oracle
