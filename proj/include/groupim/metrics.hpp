#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "groupim/interactions.hpp"
#include "groupim/model.hpp"

namespace groupim {

/// Full ranking of the item universe: descending score, ties broken by
/// ascending item index. No items are excluded.
inline std::vector<std::int32_t> rank_by_score(const Eigen::VectorXd& scores) {
  std::vector<std::int32_t> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return idx;
}

inline std::vector<std::int32_t> rank_items(const ModelState& state, const GroupRecord& group,
                                            const InteractionMatrix& users) {
  auto e_g = group_embedding(state, group, users);
  return rank_by_score(item_logits(state.predictor, e_g));
}

/// |top-K hits| / min(K, |relevant|). `relevant` must be sorted.
inline double recall_at_k(const std::vector<std::int32_t>& ranked,
                          const std::vector<std::int32_t>& relevant, std::size_t k) {
  if (relevant.empty()) throw std::invalid_argument("recall_at_k: empty relevant set");
  if (k < 1) throw std::invalid_argument("recall_at_k: k must be >= 1");
  std::size_t depth = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t pos = 0; pos < depth; ++pos)
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[pos])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(std::min(k, relevant.size()));
}

/// Binary-relevance NDCG: DCG = sum_{rank<=K, hit} 1/log2(rank+1); the
/// ideal DCG truncates at min(K, |relevant|).
inline double ndcg_at_k(const std::vector<std::int32_t>& ranked,
                        const std::vector<std::int32_t>& relevant, std::size_t k) {
  if (relevant.empty()) throw std::invalid_argument("ndcg_at_k: empty relevant set");
  if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
  std::size_t depth = std::min(k, ranked.size());
  double dcg = 0.0;
  for (std::size_t pos = 0; pos < depth; ++pos)
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[pos]))
      dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  std::size_t ideal = std::min(k, relevant.size());
  double idcg = 0.0;
  for (std::size_t pos = 0; pos < ideal; ++pos)
    idcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  return dcg / idcg;
}

}  // namespace groupim
