#include <catch2/catch_amalgamated.hpp>

#include "cbal/estimators.hpp"

using namespace cbal;

TEST_CASE("focal mean and variance") {
  Eigen::VectorXd y(2);
  y << 0.0, 1.0;
  MeanVar mv = focal_mean_var(y);
  CHECK(mv.mean == 0.5);
  CHECK(mv.var == Catch::Approx(0.125));

  Eigen::VectorXd c = Eigen::VectorXd::Constant(5, 2.0);
  CHECK(focal_mean_var(c).var == 0.0);

  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK_THROWS_AS(focal_mean_var(one), Error);
}

TEST_CASE("weighted mean basics") {
  Eigen::VectorXd y(2), w(2);
  y << 0.0, 4.0;
  w << 0.25, 0.75;
  CHECK(weighted_mean(w, y).value == Catch::Approx(3.0));

  Eigen::VectorXd u = Eigen::VectorXd::Constant(4, 0.25);
  Eigen::VectorXd y4(4);
  y4 << 1, 2, 3, 4;
  CHECK(weighted_mean(u, y4).value == Catch::Approx(2.5));

  Eigen::VectorXd single(3);
  single << 0, 1, 0;
  Eigen::VectorXd y3(3);
  y3 << 9, 7, 5;
  CHECK(weighted_mean(single, y3).value == Catch::Approx(7.0));

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(weighted_mean(zero, y3), Error);

  // Hajek invariance to rescaling
  WeightedMean a = weighted_mean(w, y);
  WeightedMean b = weighted_mean(Eigen::VectorXd(17.0 * w), y);
  CHECK(a.value == Catch::Approx(b.value).margin(1e-14));
  CHECK(b.hajek_normalized);
}

namespace {

struct Fixture {
  Eigen::MatrixXd design;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
  std::vector<int> cluster;
};

Fixture make_fixture(int n, unsigned seed, bool clustered = false) {
  Fixture f;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  f.design.resize(n, 2);
  f.y.resize(n);
  f.w.resize(n);
  for (int i = 0; i < n; ++i) {
    f.design(i, 0) = norm(rng);
    f.design(i, 1) = norm(rng);
    f.y(i) = 1.0 + 2.0 * f.design(i, 0) - f.design(i, 1);
    f.w(i) = unif(rng);
    if (clustered) f.cluster.push_back(i % 3);
  }
  f.w /= f.w.sum();
  return f;
}

}  // namespace

TEST_CASE("outcome model interpolates exactly linear outcomes at tiny penalty") {
  Fixture f = make_fixture(50, 21);
  OutcomeModelFit fit = fit_outcome_model(f.design, {}, f.y, f.w, 1e-8);
  CHECK((f.y - fit.fitted).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("huge penalty shrinks to weighted cluster means") {
  Fixture f = make_fixture(60, 22, true);
  Eigen::VectorXd noisy = f.y;
  OutcomeModelFit fit = fit_outcome_model(f.design, f.cluster, noisy, f.w, 1e8, 3);
  for (int j = 0; j < 3; ++j) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 60; ++i) {
      if (f.cluster[(std::size_t)i] != j) continue;
      num += f.w(i) * noisy(i);
      den += f.w(i);
    }
    for (int i = 0; i < 60; ++i)
      if (f.cluster[(std::size_t)i] == j)
        CHECK(fit.fitted(i) == Catch::Approx(num / den).margin(1e-4));
  }
}

TEST_CASE("negative weights are clipped in the outcome fit and recorded") {
  Fixture f = make_fixture(30, 23);
  f.w(4) = -0.2;
  f.w(9) = -0.05;
  OutcomeModelFit fit = fit_outcome_model(f.design, {}, f.y, f.w, 1.0);
  CHECK(fit.n_clipped_weights == 2);
}

TEST_CASE("RVE is zero under a perfect fit and matches the constant-model HC2 term") {
  Fixture f = make_fixture(40, 24);
  OutcomeModelFit exact = fit_outcome_model(f.design, {}, f.y, f.w, 1e-10);
  CHECK(rve_variance(f.w, f.y, exact) < 1e-12);

  std::mt19937_64 rng(77);
  std::normal_distribution<double> norm;
  for (int rep = 0; rep < 20; ++rep) {
    int n = 15 + rep;
    Eigen::VectorXd y(n), w(n);
    for (int i = 0; i < n; ++i) {
      y(i) = norm(rng);
      w(i) = std::abs(norm(rng)) + 0.05;
    }
    w /= w.sum();
    // Constant outcome model at the Hajek mean.
    OutcomeModelFit constant;
    constant.fitted = Eigen::VectorXd::Constant(n, w.dot(y));
    double rve = rve_variance(w, y, constant);
    Eigen::VectorXd yf(3);
    yf << 0.1, 0.4, -0.2;
    Hc2Variance hc2 = hc2_variance(w, yf, y);
    CHECK(std::abs(rve - hc2.v_comparison) < 1e-10);
  }
}

TEST_CASE("uniform-weight constant-model RVE is the scaled outcome variance") {
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 6;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(4, 0.25);
  OutcomeModelFit constant;
  constant.fitted = Eigen::VectorXd::Constant(4, y.mean());
  double expected = (y.array() - y.mean()).square().sum() / 16.0;
  CHECK(rve_variance(w, y, constant) == Catch::Approx(expected).margin(1e-14));
}

TEST_CASE("hc2 agrees with the hand-derived two-sample formula") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> norm;
  const int n = 12;
  Eigen::VectorXd yf(n), yc(n);
  for (int i = 0; i < n; ++i) {
    yf(i) = norm(rng) + 1.0;
    yc(i) = norm(rng);
  }
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / n);
  Hc2Variance v = hc2_variance(w, yf, yc);
  // Equal sizes, uniform weights: each group term is (1/n^2) sum (y - mean)^2.
  double vf = (yf.array() - yf.mean()).square().sum() / (n * n);
  double vc = (yc.array() - yc.mean()).square().sum() / (n * n);
  CHECK(std::abs(v.v_focal - vf) < 1e-12);
  CHECK(std::abs(v.v_comparison - vc) < 1e-12);
}

TEST_CASE("hc2 rejects a single effective comparison unit") {
  Eigen::VectorXd yf(3), yc(3), w(3);
  yf << 1, 2, 3;
  yc << 4, 5, 6;
  w << 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(hc2_variance(w, yf, yc), Error);
}

TEST_CASE("hc2 of constant outcomes is zero") {
  Eigen::VectorXd yf = Eigen::VectorXd::Constant(5, 3.0);
  Eigen::VectorXd yc = Eigen::VectorXd::Constant(7, 3.0);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(7, 1.0 / 7.0);
  Hc2Variance v = hc2_variance(w, yf, yc);
  CHECK(v.v_focal < 1e-30);
  CHECK(v.v_comparison < 1e-30);
}

TEST_CASE("difference disparity with the normal quantile") {
  CHECK(normal_quantile(0.975) == Catch::Approx(1.959964).margin(5e-7));

  MeanVar f{1.0, 0.25}, c{0.0, 0.25};
  DisparityEstimate e = disparity_difference(f, c, 0.05);
  CHECK(e.point == 1.0);
  double z = normal_quantile(0.975);
  CHECK(e.ci_low == Catch::Approx(1.0 - z * std::sqrt(0.5)).margin(1e-12));
  CHECK(e.ci_high == Catch::Approx(1.0 + z * std::sqrt(0.5)).margin(1e-12));

  MeanVar same{0.3, 0.01};
  DisparityEstimate zero = disparity_difference(same, same, 0.05);
  CHECK(zero.point == 0.0);
  CHECK(zero.ci_low == Catch::Approx(-zero.ci_high).margin(1e-12));
}

TEST_CASE("risk ratio disparity via the delta method") {
  MeanVar f{0.045, 1e-6}, c{0.041, 1e-6};
  DisparityEstimate e = disparity_risk_ratio(f, c, 0.05);
  CHECK(e.point == Catch::Approx(0.045 / 0.041).epsilon(1e-12));
  CHECK(e.point == Catch::Approx(1.0976).margin(5e-4));
  CHECK(e.ci_low > 0.0);
  CHECK(e.ci_low <= e.point);
  CHECK(e.point <= e.ci_high);

  MeanVar equal{0.3, 1e-5};
  DisparityEstimate one = disparity_risk_ratio(equal, equal, 0.05);
  CHECK(one.point == 1.0);
  CHECK(std::abs(std::log(one.ci_low) + std::log(one.ci_high)) < 1e-12);

  MeanVar bad{0.0, 1e-5};
  CHECK_THROWS_AS(disparity_risk_ratio(equal, bad, 0.05), Error);
}

TEST_CASE("scale equivariance of the estimators") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> norm;
  MeanVar f{2.0, 0.04}, c{1.5, 0.09};
  DisparityEstimate d1 = disparity_difference(f, c, 0.05);
  const double k = 3.5;
  MeanVar fk{k * f.mean, k * k * f.var}, ck{k * c.mean, k * k * c.var};
  DisparityEstimate dk = disparity_difference(fk, ck, 0.05);
  CHECK(dk.point == Catch::Approx(k * d1.point).margin(1e-12));
  CHECK(dk.ci_low == Catch::Approx(k * d1.ci_low).margin(1e-12));

  DisparityEstimate r1 = disparity_risk_ratio(f, c, 0.05);
  DisparityEstimate rk = disparity_risk_ratio(fk, ck, 0.05);
  CHECK(rk.point == Catch::Approx(r1.point).margin(1e-12));
  CHECK(rk.ci_low == Catch::Approx(r1.ci_low).margin(1e-10));
  (void)rng;
  (void)norm;
}

TEST_CASE("wider variance gives a strictly wider interval") {
  MeanVar f{1.0, 0.1}, c{0.2, 0.1}, c2{0.2, 0.2};
  DisparityEstimate a = disparity_difference(f, c, 0.05);
  DisparityEstimate b = disparity_difference(f, c2, 0.05);
  CHECK(b.ci_high - b.ci_low > a.ci_high - a.ci_low);
}
