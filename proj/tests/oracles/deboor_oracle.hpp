#pragma once

#include <Eigen/Dense>
#include <vector>

// Test-only oracle: naive recursive Cox-de Boor evaluation of B-splines and
// their derivatives, plus an independently coded natural-constraint
// elimination. Kept deliberately simple and separate from the production
// evaluation path.
namespace deboor_oracle {

inline double bspline(const std::vector<double>& t, int i, int order, double x) {
  if (order == 1) {
    double tmax = t.back();
    if (t[(std::size_t)i] <= x && x < t[(std::size_t)i + 1]) return 1.0;
    // close the right end of the last nonempty interval
    if (x == tmax && t[(std::size_t)i] < t[(std::size_t)i + 1] && t[(std::size_t)i + 1] == tmax)
      return 1.0;
    return 0.0;
  }
  double left = 0.0, right = 0.0;
  double dl = t[(std::size_t)(i + order - 1)] - t[(std::size_t)i];
  double dr = t[(std::size_t)(i + order)] - t[(std::size_t)(i + 1)];
  if (dl > 0.0) left = (x - t[(std::size_t)i]) / dl * bspline(t, i, order - 1, x);
  if (dr > 0.0) right = (t[(std::size_t)(i + order)] - x) / dr * bspline(t, i + 1, order - 1, x);
  return left + right;
}

inline double bspline_deriv(const std::vector<double>& t, int i, int order, double x, int nder) {
  if (nder == 0) return bspline(t, i, order, x);
  double left = 0.0, right = 0.0;
  double dl = t[(std::size_t)(i + order - 1)] - t[(std::size_t)i];
  double dr = t[(std::size_t)(i + order)] - t[(std::size_t)(i + 1)];
  if (dl > 0.0) left = bspline_deriv(t, i, order - 1, x, nder - 1) / dl;
  if (dr > 0.0) right = bspline_deriv(t, i + 1, order - 1, x, nder - 1) / dr;
  return (order - 1) * (left - right);
}

// Natural cubic basis on the given clamped knot vector: drop the first
// B-spline, then eliminate the first and last remaining columns against the
// two boundary second-derivative constraints.
inline Eigen::MatrixXd natural_basis(const std::vector<double>& knots,
                                     const std::vector<double>& xs) {
  const int order = 4;
  const int nb = static_cast<int>(knots.size()) - order;
  const int ncols = nb - 1;  // B-splines 1..nb-1
  const double lo = knots.front(), hi = knots.back();

  Eigen::MatrixXd c(2, ncols);
  for (int j = 0; j < ncols; ++j) {
    c(0, j) = bspline_deriv(knots, j + 1, order, lo, 2);
    c(1, j) = bspline_deriv(knots, j + 1, order, hi, 2);
  }
  const int last = ncols - 1;
  Eigen::Matrix2d elim;
  elim << c(0, 0), c(0, last), c(1, 0), c(1, last);
  Eigen::MatrixXd combo = Eigen::MatrixXd::Zero(ncols, ncols - 2);
  for (int k = 1; k <= ncols - 2; ++k) {
    Eigen::Vector2d ab = elim.inverse() * Eigen::Vector2d(-c(0, k), -c(1, k));
    combo(k, k - 1) = 1.0;
    combo(0, k - 1) += ab(0);
    combo(last, k - 1) += ab(1);
  }

  Eigen::MatrixXd out(static_cast<Eigen::Index>(xs.size()), ncols - 2);
  for (std::size_t r = 0; r < xs.size(); ++r) {
    Eigen::RowVectorXd brow(ncols);
    for (int j = 0; j < ncols; ++j) brow(j) = bspline(knots, j + 1, order, xs[r]);
    out.row(static_cast<Eigen::Index>(r)) = brow * combo;
  }
  return out;
}

}  // namespace deboor_oracle
