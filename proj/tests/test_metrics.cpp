#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "groupim/metrics.hpp"
#include "groupim/synthetic.hpp"

using namespace groupim;

TEST(RankByScore, TiesBreakByAscendingIndex) {
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(4);
  EXPECT_EQ(rank_by_score(scores), (std::vector<std::int32_t>{0, 1, 2, 3}));
}

TEST(RankByScore, SortsDescending) {
  Eigen::VectorXd scores(3);
  scores << 0.1, 0.9, 0.5;
  EXPECT_EQ(rank_by_score(scores), (std::vector<std::int32_t>{1, 2, 0}));
}

TEST(RankByScore, InvariantToConstantShift) {
  Eigen::VectorXd scores(5);
  scores << 0.3, -1.0, 2.0, 0.0, 0.3;
  auto base = rank_by_score(scores);
  auto shifted = rank_by_score((scores.array() + 42.0).matrix());
  EXPECT_EQ(base, shifted);
}

TEST(RankItems, EveryItemAppearsExactlyOnce) {
  auto ds = synthesize_dataset(10, 12, 4, 2, 0.1, 3);
  auto state = init_params(12, AggregatorKind::Meanpool, {4, 1.0, 0.5, 5}, 5);
  auto ranking = rank_items(state, ds.groups[0], ds.users);
  std::vector<std::int32_t> sorted = ranking;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::int32_t> expected(12);
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(sorted, expected);
}

TEST(RankItems, UnknownMemberThrows) {
  auto ds = synthesize_dataset(10, 12, 4, 2, 0.1, 3);
  auto state = init_params(12, AggregatorKind::Meanpool, {4, 1.0, 0.5, 5}, 5);
  GroupRecord g;
  g.members = {0, 99};
  g.items = {1};
  EXPECT_THROW(rank_items(state, g, ds.users), std::invalid_argument);
}

TEST(RecallAtK, FullHitIsOne) {
  EXPECT_DOUBLE_EQ(recall_at_k({3, 1, 0, 2}, {1, 3}, 2), 1.0);
}

TEST(RecallAtK, PartialHitUsesTruncatedNormalizer) {
  // 1 of 2 relevant inside top-5 -> 1 / min(5, 2) = 0.5
  EXPECT_DOUBLE_EQ(recall_at_k({0, 1, 2, 3, 4, 5}, {4, 5}, 5), 0.5);
}

TEST(RecallAtK, NoHitIsZero) {
  EXPECT_DOUBLE_EQ(recall_at_k({0, 1, 2, 3}, {3}, 2), 0.0);
}

TEST(RecallAtK, ErrorsOnDegenerateInput) {
  EXPECT_THROW(recall_at_k({0, 1}, {}, 1), std::invalid_argument);
  EXPECT_THROW(recall_at_k({0, 1}, {0}, 0), std::invalid_argument);
}

TEST(NdcgAtK, SingleRelevantAtRankOneIsOne) {
  EXPECT_DOUBLE_EQ(ndcg_at_k({2, 0, 1}, {2}, 3), 1.0);
}

TEST(NdcgAtK, MatchesHandComputedValue) {
  // ranked [i3, i1, i2], relevant {i1, i2}, k=3
  double value = ndcg_at_k({3, 1, 2}, {1, 2}, 3);
  double expected = (1.0 / std::log2(3.0) + 1.0 / std::log2(4.0)) / (1.0 + 1.0 / std::log2(3.0));
  EXPECT_NEAR(value, expected, 1e-12);
  EXPECT_NEAR(value, 0.6934264036172708, 1e-10);
}

TEST(NdcgAtK, MissEverythingIsZero) {
  EXPECT_DOUBLE_EQ(ndcg_at_k({0, 1, 2, 3}, {3}, 2), 0.0);
}

// Exhaustive agreement with a brute-force oracle over all rankings of up to
// 6 items with up to 3 relevant items. The oracle computes DCG by scanning
// and finds the ideal DCG by maximizing over every possible ranking.
namespace {

double oracle_dcg(const std::vector<std::int32_t>& ranked, const std::vector<bool>& relevant,
                  std::size_t k) {
  double dcg = 0.0;
  for (std::size_t pos = 0; pos < std::min(k, ranked.size()); ++pos)
    if (relevant[static_cast<std::size_t>(ranked[pos])])
      dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  return dcg;
}

}  // namespace

TEST(MetricOracles, ExhaustiveEnumerationUpToSixItems) {
  for (int n = 2; n <= 6; ++n) {
    std::vector<std::int32_t> base(static_cast<std::size_t>(n));
    std::iota(base.begin(), base.end(), 0);

    // all relevant subsets of size 1..3
    std::vector<std::vector<std::int32_t>> subsets;
    for (int mask = 1; mask < (1 << n); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) > 3) continue;
      std::vector<std::int32_t> subset;
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) subset.push_back(i);
      subsets.push_back(std::move(subset));
    }

    // Precompute ideal DCG per (subset, k) by maximizing over all rankings.
    std::vector<std::vector<std::int32_t>> rankings;
    {
      auto perm = base;
      do rankings.push_back(perm);
      while (std::next_permutation(perm.begin(), perm.end()));
    }

    for (const auto& subset : subsets) {
      std::vector<bool> rel_mask(static_cast<std::size_t>(n), false);
      for (auto i : subset) rel_mask[static_cast<std::size_t>(i)] = true;
      for (std::size_t k = 1; k <= static_cast<std::size_t>(n); ++k) {
        double idcg = 0.0;
        for (const auto& r : rankings) idcg = std::max(idcg, oracle_dcg(r, rel_mask, k));
        for (const auto& r : rankings) {
          double expected_ndcg = oracle_dcg(r, rel_mask, k) / idcg;
          ASSERT_DOUBLE_EQ(ndcg_at_k(r, subset, k), expected_ndcg);

          std::size_t hits = 0;
          for (std::size_t pos = 0; pos < k; ++pos)
            if (rel_mask[static_cast<std::size_t>(r[pos])]) ++hits;
          double expected_recall =
              static_cast<double>(hits) / static_cast<double>(std::min(k, subset.size()));
          ASSERT_DOUBLE_EQ(recall_at_k(r, subset, k), expected_recall);
        }
      }
    }
  }
}

TEST(MetricBounds, AlwaysWithinUnitIntervalAndTightnessCondition) {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    int n = 3 + static_cast<int>(rng.below(8));
    std::vector<std::int32_t> ranking(static_cast<std::size_t>(n));
    std::iota(ranking.begin(), ranking.end(), 0);
    rng.shuffle(ranking);
    std::vector<std::int32_t> relevant;
    for (int i = 0; i < n; ++i)
      if (rng.uniform01() < 0.3) relevant.push_back(i);
    if (relevant.empty()) relevant.push_back(static_cast<std::int32_t>(rng.below(n)));
    std::size_t k = 1 + rng.below(static_cast<std::uint64_t>(n));

    double r = recall_at_k(ranking, relevant, k);
    double nd = ndcg_at_k(ranking, relevant, k);
    ASSERT_GE(r, 0.0);
    ASSERT_LE(r, 1.0);
    ASSERT_GE(nd, 0.0);
    ASSERT_LE(nd, 1.0 + 1e-12);

    // both hit 1 together exactly when the first min(k, |rel|) ranks are
    // all relevant; NDCG alone already pins that condition
    std::size_t need = std::min(k, relevant.size());
    bool prefix_relevant = true;
    for (std::size_t pos = 0; pos < need; ++pos)
      if (!std::binary_search(relevant.begin(), relevant.end(), ranking[pos]))
        prefix_relevant = false;
    ASSERT_EQ(r == 1.0 && nd == 1.0, prefix_relevant);
    ASSERT_EQ(nd == 1.0, prefix_relevant);
    if (prefix_relevant) ASSERT_EQ(r, 1.0);
  }
}
