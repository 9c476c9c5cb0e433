#include <catch2/catch_amalgamated.hpp>

#include "cbal/ob.hpp"

using namespace cbal;

TEST_CASE("OLS exactness: linear outcomes are recovered at any target") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> norm;
  Eigen::MatrixXd x(40, 3);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = norm(rng);
  Eigen::VectorXd beta(3);
  beta << 1.5, -2.0, 0.25;
  Eigen::VectorXd y = (x * beta).array() + 0.75;
  Eigen::VectorXd target(3);
  target << 2.0, 1.0, -1.0;
  ObEstimate e = ob_estimate(x, y, target);
  CHECK(std::abs(e.estimate - (0.75 + beta.dot(target))) < 1e-10);
}

TEST_CASE("implied weights reproduce the regression prediction") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> norm;
  for (int rep = 0; rep < 20; ++rep) {
    int n = 20 + rep;
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n), target(2);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = norm(rng);
      x(i, 1) = norm(rng);
      y(i) = norm(rng);
    }
    target << norm(rng), norm(rng);
    ObEstimate e = ob_estimate(x, y, target);
    CHECK(std::abs(e.weights.dot(y) - e.estimate) < 1e-10);
    CHECK(std::abs(e.weights.sum() - 1.0) < 1e-10);
  }
}

TEST_CASE("target at the sample mean returns the group mean") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> norm;
  Eigen::MatrixXd x(25, 2);
  Eigen::VectorXd y(25);
  for (int i = 0; i < 25; ++i) {
    x(i, 0) = norm(rng);
    x(i, 1) = norm(rng);
    y(i) = norm(rng);
  }
  Eigen::VectorXd target = x.colwise().mean();
  ObEstimate e = ob_estimate(x, y, target);
  CHECK(e.estimate == Catch::Approx(y.mean()).margin(1e-12));
}

TEST_CASE("rank-deficient design is an error") {
  Eigen::MatrixXd x(5, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
  Eigen::VectorXd y = Eigen::VectorXd::Ones(5);
  CHECK_THROWS_AS(ob_estimate(x, y, Eigen::Vector2d(1, 2)), Error);
}

TEST_CASE("linear truth has vanishing approximation error") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> norm;
  Eigen::MatrixXd x(60, 2), tp(30, 2);
  for (int i = 0; i < 60; ++i) {
    x(i, 0) = norm(rng);
    x(i, 1) = norm(rng);
  }
  for (int i = 0; i < 30; ++i) {
    tp(i, 0) = norm(rng) + 0.5;
    tp(i, 1) = norm(rng) - 0.25;
  }
  auto m = [](const Eigen::RowVectorXd& r) { return 2.0 + 3.0 * r(0) - 1.5 * r(1); };
  ObMseDecomposition d = ob_mse_decomposition(x, m, 1.0, tp);
  CHECK(d.approximation_error < 1e-18);
  CHECK(d.d_eff >= 1.0);
}

TEST_CASE("centered target kills the design effect") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> norm;
  Eigen::MatrixXd x(50, 2);
  for (int i = 0; i < 50; ++i) {
    x(i, 0) = norm(rng);
    x(i, 1) = norm(rng);
  }
  auto m = [](const Eigen::RowVectorXd& r) { return r(0); };
  // Target equal to the group's own empirical distribution.
  ObMseDecomposition d = ob_mse_decomposition(x, m, 2.0, x);
  CHECK(d.d_eff == Catch::Approx(1.0).margin(1e-12));
  CHECK(d.estimation_error == Catch::Approx(2.0 / 50.0).margin(1e-12));
}

TEST_CASE("analytic MSE matches Monte Carlo for a quadratic truth") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> norm;
  const int n = 200, nt = 400;
  Eigen::MatrixXd x(n, 2), tp(nt, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = norm(rng);
    x(i, 1) = norm(rng);
  }
  for (int i = 0; i < nt; ++i) {
    tp(i, 0) = norm(rng) + 0.4;
    tp(i, 1) = norm(rng);
  }
  auto m = [](const Eigen::RowVectorXd& r) { return r(0) + 0.5 * r(0) * r(0) - 0.3 * r(1); };
  const double sigma = 1.0;
  ObMseDecomposition d = ob_mse_decomposition(x, m, sigma * sigma, tp);

  // Monte Carlo of the OB estimator on the fixed design.
  Eigen::VectorXd mvals(n);
  for (int i = 0; i < n; ++i) mvals(i) = m(x.row(i));
  double mu_target = 0.0;
  for (int i = 0; i < nt; ++i) mu_target += m(tp.row(i));
  mu_target /= nt;
  Eigen::VectorXd target_mean = tp.colwise().mean();

  const int reps = 5000;
  double mse = 0.0;
  std::vector<double> sq(reps);
  for (int r = 0; r < reps; ++r) {
    Eigen::VectorXd y = mvals;
    for (int i = 0; i < n; ++i) y(i) += sigma * norm(rng);
    ObEstimate e = ob_estimate(x, y, target_mean);
    double err = e.estimate - mu_target;
    sq[(std::size_t)r] = err * err;
    mse += err * err;
  }
  mse /= reps;
  double var_sq = 0.0;
  for (double v : sq) var_sq += (v - mse) * (v - mse);
  var_sq /= (reps - 1);
  double mc_se = std::sqrt(var_sq / reps);
  CHECK(std::abs(mse - d.total_mse) < 4.0 * mc_se);
}
