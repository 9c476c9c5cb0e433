#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cbal/common.hpp"
#include "cbal/dataset.hpp"

namespace cbal {

// ---------------------------------------------------------------------------
// B-spline machinery (cubic, clamped knot vector). Evaluation uses the
// iterative triangular scheme; derivatives use the lower-order recursion.
// ---------------------------------------------------------------------------
namespace detail {

constexpr int kOrder = 4;  // cubic

inline int find_span(const std::vector<double>& knots, double x) {
  // Largest i with knots[i] <= x < knots[i+1], clamped so that the boundary
  // value x == knots.back() lands in the last nontrivial interval.
  int nb = static_cast<int>(knots.size()) - kOrder;
  int lo = kOrder - 1, hi = nb - 1;
  if (x >= knots[static_cast<std::size_t>(nb)]) return nb - 1;
  if (x <= knots[kOrder - 1]) return kOrder - 1;
  while (lo + 1 < hi + 1) {
    int mid = (lo + hi + 1) / 2;
    if (knots[static_cast<std::size_t>(mid)] <= x) lo = mid; else hi = mid - 1;
    if (lo == hi) break;
  }
  return lo;
}

// Values of the kOrder nonzero basis functions at x; first has index span-3.
inline void basis_funs(const std::vector<double>& knots, int span, double x, double out[kOrder]) {
  double left[kOrder], right[kOrder];
  out[0] = 1.0;
  for (int j = 1; j < kOrder; ++j) {
    left[j] = x - knots[static_cast<std::size_t>(span + 1 - j)];
    right[j] = knots[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      double tmp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    out[j] = saved;
  }
}

// Values and derivatives up to order `nder` of the nonzero basis functions.
inline void basis_funs_ders(const std::vector<double>& knots, int span, double x, int nder,
                            double ders[3][kOrder]) {
  double ndu[kOrder][kOrder], left[kOrder], right[kOrder];
  ndu[0][0] = 1.0;
  for (int j = 1; j < kOrder; ++j) {
    left[j] = x - knots[static_cast<std::size_t>(span + 1 - j)];
    right[j] = knots[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      double tmp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    ndu[j][j] = saved;
  }
  for (int j = 0; j < kOrder; ++j) ders[0][j] = ndu[j][kOrder - 1];
  const int p = kOrder - 1;
  double a[2][kOrder];
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= nder; ++k) {
      double d = 0.0;
      int rk = r - k, pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      int j1 = (rk >= -1) ? 1 : -rk;
      int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= nder; ++k) {
    for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
    factor *= (p - k);
  }
}

// Dense row of all nb basis values (or derivative of given order) at x.
inline Eigen::VectorXd bspline_row(const std::vector<double>& knots, double x, int deriv) {
  int nb = static_cast<int>(knots.size()) - kOrder;
  Eigen::VectorXd row = Eigen::VectorXd::Zero(nb);
  int span = find_span(knots, x);
  double ders[3][kOrder];
  basis_funs_ders(knots, span, x, 2, ders);
  for (int j = 0; j < kOrder; ++j) row(span - kOrder + 1 + j) = ders[deriv][j];
  return row;
}

inline double quantile_type7(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double h = (static_cast<double>(n) - 1.0) * p;
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo >= n - 1) return sorted[n - 1];
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

// A fitted natural cubic spline basis: boundary knots at min/max, df-1
// interior knots at equally spaced quantiles. In-range evaluation spans the
// natural-spline space (second derivative zero at the boundaries, constant
// excluded); outside the boundary knots the basis extends linearly.
struct NaturalSplineBasis {
  int df = 0;
  std::vector<double> knots;      // clamped knot vector (boundary x4)
  Eigen::MatrixXd null_combo;     // (nb-1) x df: natural constraint null basis
                                  // over B-splines 1..nb-1 (first dropped)
  double lo = 0.0, hi = 0.0;      // boundary knots
  Eigen::RowVectorXd value_lo, value_hi, slope_lo, slope_hi;  // for extrapolation

  Eigen::RowVectorXd eval_row(double x) const {
    if (x < lo) return value_lo + (x - lo) * slope_lo;
    if (x > hi) return value_hi + (x - hi) * slope_hi;
    Eigen::VectorXd b = detail::bspline_row(knots, x, 0);
    return b.tail(b.size() - 1).transpose() * null_combo;
  }
};

inline NaturalSplineBasis fit_natural_spline(const std::vector<double>& x, int df) {
  require(df >= 1, ErrorKind::Contract, "spline df must be >= 1");
  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct(sorted);
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  require(static_cast<int>(distinct.size()) >= df + 1, ErrorKind::DegenerateInput,
          "spline needs at least df+1 distinct values (got " + std::to_string(distinct.size()) +
              " for df=" + std::to_string(df) + "); consider a raw term instead");

  NaturalSplineBasis s;
  s.df = df;
  s.lo = sorted.front();
  s.hi = sorted.back();
  for (int k = 0; k < detail::kOrder; ++k) s.knots.push_back(s.lo);
  for (int k = 1; k < df; ++k)
    s.knots.push_back(detail::quantile_type7(sorted, static_cast<double>(k) / df));
  for (int k = 0; k < detail::kOrder; ++k) s.knots.push_back(s.hi);

  const int nb = static_cast<int>(s.knots.size()) - detail::kOrder;  // df + 3
  // Second-derivative constraint rows over B-splines 1..nb-1.
  Eigen::MatrixXd c(2, nb - 1);
  c.row(0) = detail::bspline_row(s.knots, s.lo, 2).tail(nb - 1).transpose();
  c.row(1) = detail::bspline_row(s.knots, s.hi, 2).tail(nb - 1).transpose();

  // Null basis by eliminating the first and last remaining columns: for each
  // free column k, v = e_k + alpha e_0 + beta e_last with [alpha beta]
  // solving the 2x2 system that zeroes both constraint rows.
  const int ncols = nb - 1;
  const int last = ncols - 1;
  Eigen::Matrix2d elim;
  elim << c(0, 0), c(0, last), c(1, 0), c(1, last);
  require(std::abs(elim.determinant()) > 1e-12, ErrorKind::Numeric,
          "degenerate natural-spline constraint system");
  s.null_combo = Eigen::MatrixXd::Zero(ncols, df);
  for (int k = 1; k <= df; ++k) {
    Eigen::Vector2d rhs(-c(0, k), -c(1, k));
    Eigen::Vector2d ab = elim.colPivHouseholderQr().solve(rhs);
    s.null_combo(k, k - 1) = 1.0;
    s.null_combo(0, k - 1) += ab(0);
    s.null_combo(last, k - 1) += ab(1);
  }

  auto natural_row = [&](double t, int deriv) {
    Eigen::VectorXd b = detail::bspline_row(s.knots, t, deriv);
    return Eigen::RowVectorXd(b.tail(nb - 1).transpose() * s.null_combo);
  };
  s.value_lo = natural_row(s.lo, 0);
  s.value_hi = natural_row(s.hi, 0);
  s.slope_lo = natural_row(s.lo, 1);
  s.slope_hi = natural_row(s.hi, 1);
  return s;
}

inline Eigen::MatrixXd natural_spline_basis(const std::vector<double>& x, const NaturalSplineBasis& s) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(x.size()), s.df);
  for (std::size_t i = 0; i < x.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = s.eval_row(x[i]);
  return m;
}

// ---------------------------------------------------------------------------
// Basis specification and expansion
// ---------------------------------------------------------------------------

struct BasisTerm {
  enum class Kind { Raw, Spline, Interaction };
  Kind kind;
  std::string var_a;
  std::string var_b;  // interaction only
  int df = 0;         // spline only

  static BasisTerm raw(std::string v) { return {Kind::Raw, std::move(v), "", 0}; }
  static BasisTerm spline(std::string v, int df) { return {Kind::Spline, std::move(v), "", df}; }
  static BasisTerm interaction(std::string a, std::string b) {
    if (a > b) std::swap(a, b);  // canonical ordering
    return {Kind::Interaction, std::move(a), std::move(b), 0};
  }

  bool operator==(const BasisTerm& o) const {
    return kind == o.kind && var_a == o.var_a && var_b == o.var_b && df == o.df;
  }

  std::string label() const {
    switch (kind) {
      case Kind::Raw: return var_a;
      case Kind::Spline: return "spline(" + var_a + "," + std::to_string(df) + ")";
      case Kind::Interaction: return var_a + ":" + var_b;
    }
    return "";
  }
};

struct BasisSpec {
  std::vector<BasisTerm> terms;

  void add(BasisTerm t) {
    for (const auto& e : terms)
      require(!(e == t), ErrorKind::Contract, "duplicate basis term: " + t.label());
    if (t.kind == BasisTerm::Kind::Interaction)
      require(t.var_a != t.var_b, ErrorKind::Contract, "interaction of a variable with itself: " + t.var_a);
    terms.push_back(std::move(t));
  }

  void validate(const AnalysisDataset& ds) const {
    for (const auto& t : terms) {
      require(ds.covariate_index(t.var_a) >= 0, ErrorKind::Validation,
              "basis references unknown variable '" + t.var_a + "'");
      if (t.kind == BasisTerm::Kind::Interaction)
        require(ds.covariate_index(t.var_b) >= 0, ErrorKind::Validation,
                "basis references unknown variable '" + t.var_b + "'");
    }
  }

  // One raw term per covariate, in dataset order.
  static BasisSpec all_raw(const AnalysisDataset& ds) {
    BasisSpec spec;
    for (const auto& name : ds.covariate_names) spec.add(BasisTerm::raw(name));
    return spec;
  }
};

struct ExpandedDesign {
  Eigen::MatrixXd matrix;  // n x p after constant-column drops
  std::vector<std::string> column_names;
  std::map<std::string, NaturalSplineBasis> spline_bases;  // by variable
  std::vector<std::string> dropped_columns;                // constant columns

  Eigen::Index p() const { return matrix.cols(); }
};

inline ExpandedDesign expand(const AnalysisDataset& ds, const BasisSpec& spec) {
  spec.validate(ds);
  const Eigen::Index n = static_cast<Eigen::Index>(ds.n_rows());

  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> names;
  ExpandedDesign out;

  for (const auto& t : spec.terms) {
    switch (t.kind) {
      case BasisTerm::Kind::Raw: {
        cols.push_back(ds.covariates.col(ds.covariate_index(t.var_a)));
        names.push_back(t.var_a);
        break;
      }
      case BasisTerm::Kind::Spline: {
        std::vector<double> x(static_cast<std::size_t>(n));
        Eigen::VectorXd::Map(x.data(), n) = ds.covariates.col(ds.covariate_index(t.var_a));
        NaturalSplineBasis s = fit_natural_spline(x, t.df);
        Eigen::MatrixXd m = natural_spline_basis(x, s);
        for (int j = 0; j < t.df; ++j) {
          cols.push_back(m.col(j));
          names.push_back(t.var_a + "_ns" + std::to_string(j + 1));
        }
        out.spline_bases.emplace(t.var_a, std::move(s));
        break;
      }
      case BasisTerm::Kind::Interaction: {
        Eigen::VectorXd prod = ds.covariates.col(ds.covariate_index(t.var_a)).array() *
                               ds.covariates.col(ds.covariate_index(t.var_b)).array();
        cols.push_back(prod);
        names.push_back(t.var_a + ":" + t.var_b);
        break;
      }
    }
  }

  // Constant columns carry no balance information; drop with a record.
  std::vector<Eigen::Index> keep;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].maxCoeff() - cols[j].minCoeff() > 0.0)
      keep.push_back(static_cast<Eigen::Index>(j));
    else
      out.dropped_columns.push_back(names[j]);
  }
  out.matrix.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.matrix.col(static_cast<Eigen::Index>(k)) = cols[static_cast<std::size_t>(keep[k])];
    out.column_names.push_back(names[static_cast<std::size_t>(keep[k])]);
  }
  return out;
}

}  // namespace cbal
