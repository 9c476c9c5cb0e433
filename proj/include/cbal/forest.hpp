#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cbal/common.hpp"

namespace cbal {

struct ForestConfig {
  int n_trees = 200;
  int max_depth = 6;
  int min_leaf = 5;
  double feature_subsample = 0.0;  // 0 = auto (sqrt(d)/d)
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void check() const {
    require(n_trees >= 1 && max_depth >= 1 && min_leaf >= 1, ErrorKind::Contract,
            "forest bounds must be strictly positive");
    require(feature_subsample >= 0.0 && feature_subsample <= 1.0, ErrorKind::Contract,
            "feature_subsample must be in (0,1] (0 = auto)");
  }

  int mtry(int d) const {
    double f = feature_subsample > 0.0 ? feature_subsample : std::sqrt(static_cast<double>(d)) / d;
    return std::max(1, static_cast<int>(std::lround(f * d)));
  }
};

struct TreeNode {
  int feature = -1;  // -1 = leaf
  double threshold = 0.0;
  double value = 0.0;  // node mean
  double gain = 0.0;   // SSE reduction of the split
  int n_samples = 0;
  int left = -1, right = -1;
  // Best achievable gain per feature at this node (internal nodes only);
  // split selection still draws from the sampled candidate subset.
  std::vector<double> feature_gains;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  std::vector<int> oob_rows;

  double predict(const Eigen::RowVectorXd& x) const {
    int u = 0;
    while (!nodes[static_cast<std::size_t>(u)].is_leaf()) {
      const TreeNode& nd = nodes[static_cast<std::size_t>(u)];
      u = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(u)].value;
  }

  int n_internal() const {
    int c = 0;
    for (const auto& nd : nodes) c += !nd.is_leaf();
    return c;
  }
};

struct Forest {
  std::vector<RegressionTree> trees;
  ForestConfig config;
  int n_features = 0;

  double predict(const Eigen::RowVectorXd& x) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    return s / static_cast<double>(trees.size());
  }
};

namespace detail_forest {

struct Builder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  const ForestConfig& cfg;
  int mtry;
  std::mt19937_64 rng;
  RegressionTree tree;
  std::vector<int> feat_pool;

  Builder(const Eigen::MatrixXd& x_, const Eigen::VectorXd& y_, const ForestConfig& cfg_,
          std::mt19937_64 rng_)
      : x(x_), y(y_), cfg(cfg_), mtry(cfg_.mtry(static_cast<int>(x_.cols()))), rng(rng_) {
    feat_pool.resize(static_cast<std::size_t>(x.cols()));
    std::iota(feat_pool.begin(), feat_pool.end(), 0);
  }

  // Best gain and threshold of a single feature at this node.
  std::pair<double, double> scan_feature(const std::vector<int>& rows, int f, double sum,
                                         double n) {
    std::vector<std::pair<double, int>> vals;
    vals.reserve(rows.size());
    for (int i : rows) vals.emplace_back(x(i, f), i);
    std::sort(vals.begin(), vals.end());
    double best_gain = 0.0, best_thresh = 0.0;
    double left_sum = 0.0;
    int left_n = 0;
    for (std::size_t s = 0; s + 1 < vals.size(); ++s) {
      left_sum += y(vals[s].second);
      ++left_n;
      if (vals[s].first == vals[s + 1].first) continue;
      int right_n = static_cast<int>(vals.size()) - left_n;
      if (left_n < cfg.min_leaf || right_n < cfg.min_leaf) continue;
      double right_sum = sum - left_sum;
      double gain = left_sum * left_sum / left_n + right_sum * right_sum / right_n - sum * sum / n;
      if (gain > best_gain + 1e-12) {
        best_gain = gain;
        best_thresh = 0.5 * (vals[s].first + vals[s + 1].first);
      }
    }
    return {best_gain, best_thresh};
  }

  int build(std::vector<int>& rows, int depth) {
    int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double sum = 0.0, sumsq = 0.0;
    for (int i : rows) {
      sum += y(i);
      sumsq += y(i) * y(i);
    }
    const double n = static_cast<double>(rows.size());
    tree.nodes[static_cast<std::size_t>(id)].value = sum / n;
    tree.nodes[static_cast<std::size_t>(id)].n_samples = static_cast<int>(rows.size());
    double sse = sumsq - sum * sum / n;
    if (depth >= cfg.max_depth || static_cast<int>(rows.size()) < 2 * cfg.min_leaf || sse <= 1e-12)
      return id;

    // Sample mtry candidate features without replacement (partial shuffle).
    for (int k = 0; k < mtry; ++k) {
      std::uniform_int_distribution<int> pick(k, static_cast<int>(feat_pool.size()) - 1);
      std::swap(feat_pool[static_cast<std::size_t>(k)], feat_pool[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<char> sampled(static_cast<std::size_t>(x.cols()), 0);
    for (int k = 0; k < mtry; ++k) sampled[static_cast<std::size_t>(feat_pool[(std::size_t)k])] = 1;

    // Scan every feature for the interaction bookkeeping; the split itself
    // is chosen among the sampled candidates only.
    const int d = static_cast<int>(x.cols());
    std::vector<double> gains(static_cast<std::size_t>(d), 0.0);
    int best_feat = -1;
    double best_gain = 0.0, best_thresh = 0.0;
    for (int f = 0; f < d; ++f) {
      auto [gain, thresh] = scan_feature(rows, f, sum, n);
      gains[static_cast<std::size_t>(f)] = gain;
      if (sampled[static_cast<std::size_t>(f)] && gain > best_gain + 1e-12) {
        best_gain = gain;
        best_feat = f;
        best_thresh = thresh;
      }
    }
    if (best_feat < 0) return id;

    std::vector<int> left, right;
    for (int i : rows) (x(i, best_feat) <= best_thresh ? left : right).push_back(i);
    rows.clear();
    rows.shrink_to_fit();
    int l = build(left, depth + 1);
    int r = build(right, depth + 1);
    TreeNode& nd = tree.nodes[static_cast<std::size_t>(id)];
    nd.feature = best_feat;
    nd.threshold = best_thresh;
    nd.gain = best_gain;
    nd.left = l;
    nd.right = r;
    nd.feature_gains = std::move(gains);
    return id;
  }
};

}  // namespace detail_forest

// Ensemble of CART regression trees with the variance-reduction split rule,
// bootstrap resampling, and per-split feature subsampling. Per-tree RNG
// streams are derived from the seed, so training is deterministic and
// parallelizable across trees.
inline Forest train_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const ForestConfig& cfg, int threads = 1) {
  cfg.check();
  const int n = static_cast<int>(x.rows());
  require(y.size() == n, ErrorKind::Contract, "length mismatch");
  require(n >= 2 * cfg.min_leaf, ErrorKind::Contract, "too few rows to grow a tree");
  double mean = y.mean();
  require((y.array() - mean).square().sum() > 1e-12, ErrorKind::DegenerateInput,
          "zero-variance outcome: nothing to predict");

  Forest forest;
  forest.config = cfg;
  forest.n_features = static_cast<int>(x.cols());
  forest.trees.resize(static_cast<std::size_t>(cfg.n_trees));

  parallel_for(static_cast<std::size_t>(cfg.n_trees), threads, [&](std::size_t t) {
    auto rng = make_rng(cfg.seed, 0xF0B + t);
    std::vector<int> rows;
    std::vector<char> in_bag(static_cast<std::size_t>(n), 0);
    if (cfg.bootstrap) {
      std::uniform_int_distribution<int> pick(0, n - 1);
      rows.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        int r = pick(rng);
        rows.push_back(r);
        in_bag[static_cast<std::size_t>(r)] = 1;
      }
    } else {
      rows.resize(static_cast<std::size_t>(n));
      std::iota(rows.begin(), rows.end(), 0);
      std::fill(in_bag.begin(), in_bag.end(), 1);
    }
    detail_forest::Builder b(x, y, cfg, std::move(rng));
    b.build(rows, 0);
    for (int i = 0; i < n; ++i)
      if (!in_bag[static_cast<std::size_t>(i)]) b.tree.oob_rows.push_back(i);
    forest.trees[t] = std::move(b.tree);
  });
  return forest;
}

// Out-of-bag R^2 over rows left out of at least one bootstrap sample.
inline double oob_r_squared(const Forest& forest, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& y) {
  const int n = static_cast<int>(x.rows());
  Eigen::VectorXd pred = Eigen::VectorXd::Zero(n);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(n);
  for (const auto& t : forest.trees)
    for (int i : t.oob_rows) {
      pred(i) += t.predict(x.row(i));
      count(i) += 1;
    }
  double sse = 0.0, sst = 0.0, mean = 0.0;
  int used = 0;
  for (int i = 0; i < n; ++i)
    if (count(i) > 0) {
      mean += y(i);
      ++used;
    }
  require(used > 0, ErrorKind::Contract, "no out-of-bag rows");
  mean /= used;
  for (int i = 0; i < n; ++i) {
    if (count(i) == 0) continue;
    double p = pred(i) / count(i);
    sse += (y(i) - p) * (y(i) - p);
    sst += (y(i) - mean) * (y(i) - mean);
  }
  return 1.0 - sse / sst;
}

}  // namespace cbal
