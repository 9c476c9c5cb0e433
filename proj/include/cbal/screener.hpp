#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "cbal/basis.hpp"
#include "cbal/common.hpp"
#include "cbal/dataset.hpp"
#include "cbal/forest.hpp"

namespace cbal {

struct SampleSplit {
  AnalysisDataset screen;
  AnalysisDataset analysis;
  std::vector<std::size_t> screen_rows;    // indices into the original dataset
  std::vector<std::size_t> analysis_rows;
};

// Disjoint screen/analysis partition: screen size = round(fraction * n),
// deterministic given the seed. Screen rows must never re-enter estimation.
inline SampleSplit split_sample(const AnalysisDataset& ds, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, ErrorKind::Contract,
          "screen fraction must be in (0,1)");
  const std::size_t n = ds.n_rows();
  require(n > 0, ErrorKind::Contract, "empty dataset");
  // round half to even, so a 0.5-row screen request stays empty
  auto n_screen = static_cast<std::size_t>(std::llrint(fraction * static_cast<double>(n)));
  require(n_screen >= 1, ErrorKind::Contract, "screen fraction yields an empty screen sample");
  require(n_screen < n, ErrorKind::Contract, "screen fraction yields an empty analysis sample");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(seed, 0x5197);
  std::shuffle(idx.begin(), idx.end(), rng);

  SampleSplit out;
  out.screen_rows.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_screen));
  out.analysis_rows.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_screen), idx.end());
  std::sort(out.screen_rows.begin(), out.screen_rows.end());
  std::sort(out.analysis_rows.begin(), out.analysis_rows.end());
  out.screen = ds.subset(out.screen_rows);
  out.analysis = ds.subset(out.analysis_rows);
  return out;
}

struct InteractionScore {
  int var_a = 0, var_b = 0;  // a < b, indices into covariate columns
  double score = 0.0;
  int rank = 0;
};

// Adjacent-split conditional-gain uplift: when a split on b sits directly
// under a split on a, the pair (a,b) accrues the part of the child's gain
// that exceeds the size-scaled gain b could already achieve at the parent.
// A purely additive effect of b splits off roughly proportional gain above
// and below, so only genuine effect modification accumulates. Pairs are
// symmetrized and normalized by the total split gain of the forest.
inline std::vector<InteractionScore> score_interactions(const Forest& forest) {
  std::map<std::pair<int, int>, double> acc;
  double total_gain = 0.0;
  for (const auto& tree : forest.trees) {
    for (const auto& nd : tree.nodes) {
      if (nd.is_leaf()) continue;
      total_gain += nd.gain;
      for (int child : {nd.left, nd.right}) {
        const TreeNode& ch = tree.nodes[static_cast<std::size_t>(child)];
        if (ch.is_leaf() || ch.feature == nd.feature) continue;
        double share = static_cast<double>(ch.n_samples) / static_cast<double>(nd.n_samples);
        double baseline = share * nd.feature_gains[static_cast<std::size_t>(ch.feature)];
        double uplift = ch.gain - baseline;
        if (uplift <= 0.0) continue;
        int a = std::min(nd.feature, ch.feature);
        int b = std::max(nd.feature, ch.feature);
        acc[{a, b}] += uplift;
      }
    }
  }
  std::vector<InteractionScore> scores;
  if (total_gain <= 0.0) return scores;
  for (const auto& [pair, gain] : acc) {
    InteractionScore s;
    s.var_a = pair.first;
    s.var_b = pair.second;
    s.score = gain / total_gain;
    scores.push_back(s);
  }
  std::sort(scores.begin(), scores.end(), [](const InteractionScore& x, const InteractionScore& y) {
    if (x.score != y.score) return x.score > y.score;
    return std::make_pair(x.var_a, x.var_b) < std::make_pair(y.var_a, y.var_b);
  });
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i].rank = static_cast<int>(i) + 1;
  return scores;
}

// First min(k, available) pairs as canonical interaction terms.
inline std::vector<BasisTerm> select_top_k(const std::vector<InteractionScore>& scores, int k,
                                           const std::vector<std::string>& covariate_names) {
  require(k >= 0, ErrorKind::Contract, "k must be >= 0");
  std::vector<BasisTerm> out;
  for (const auto& s : scores) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(BasisTerm::interaction(covariate_names[static_cast<std::size_t>(s.var_a)],
                                         covariate_names[static_cast<std::size_t>(s.var_b)]));
  }
  return out;
}

}  // namespace cbal
