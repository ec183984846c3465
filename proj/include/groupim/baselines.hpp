#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "groupim/checkpoint.hpp"
#include "groupim/evaluation.hpp"
#include "groupim/interactions.hpp"
#include "groupim/metrics.hpp"
#include "groupim/model.hpp"
#include "groupim/training.hpp"

namespace groupim {

/// Items ordered by descending training interaction count, index tie-break.
inline std::vector<std::int32_t> popularity_ranking(const InteractionMatrix& train) {
  if (train.num_items == 0) throw std::invalid_argument("popularity_ranking: no items");
  auto counts = train.item_counts();
  std::vector<std::int32_t> idx(counts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
    auto ca = counts[static_cast<std::size_t>(a)];
    auto cb = counts[static_cast<std::size_t>(b)];
    if (ca != cb) return ca > cb;
    return a < b;
  });
  return idx;
}

/// Popularity over all training data: individual interactions plus the
/// train-split group interactions (validation/test excluded).
inline std::vector<std::int32_t> popularity_ranking(const InteractionMatrix& users,
                                                    std::span<const GroupRecord> train_groups) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(users.num_items), 0);
  for (const auto& row : users.rows)
    for (std::int32_t i : row) ++counts[static_cast<std::size_t>(i)];
  for (const auto& g : train_groups)
    for (std::int32_t i : g.items) ++counts[static_cast<std::size_t>(i)];
  std::vector<std::int32_t> idx(counts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
    auto ca = counts[static_cast<std::size_t>(a)];
    auto cb = counts[static_cast<std::size_t>(b)];
    if (ca != cb) return ca > cb;
    return a < b;
  });
  return idx;
}

enum class ScoreAggKind { Avg, LeastMisery, Max, RelevanceDisagreement };

inline ScoreAggKind score_agg_from_string(const std::string& s) {
  if (s == "avg") return ScoreAggKind::Avg;
  if (s == "lm") return ScoreAggKind::LeastMisery;
  if (s == "max") return ScoreAggKind::Max;
  if (s == "rd") return ScoreAggKind::RelevanceDisagreement;
  throw std::invalid_argument("unknown aggregation strategy: " + s);
}

struct AggregationStrategy {
  ScoreAggKind kind = ScoreAggKind::Avg;
  double w_rel = 1.0;
  double w_dis = 1.0;
};

/// Fixed score-aggregation strategies over per-member item scores.
///   AVG: per-item mean.   LM: per-item min.   MAX: per-item max.
///   RD:  w_rel * mean - w_dis * mean over pairs |s_u(i) - s_v(i)|.
inline Eigen::VectorXd score_aggregate(const std::vector<Eigen::VectorXd>& member_scores,
                                       const AggregationStrategy& strategy) {
  if (member_scores.empty()) throw std::invalid_argument("score_aggregate: no members");
  if (strategy.w_rel < 0.0 || strategy.w_dis < 0.0)
    throw std::invalid_argument("score_aggregate: negative weights");
  const auto n = member_scores.size();
  const Eigen::Index len = member_scores.front().size();
  for (const auto& s : member_scores)
    if (s.size() != len) throw std::invalid_argument("score_aggregate: ragged score vectors");

  switch (strategy.kind) {
    case ScoreAggKind::Avg: {
      Eigen::VectorXd out = Eigen::VectorXd::Zero(len);
      for (const auto& s : member_scores) out += s;
      return out / static_cast<double>(n);
    }
    case ScoreAggKind::LeastMisery: {
      Eigen::VectorXd out = member_scores.front();
      for (std::size_t u = 1; u < n; ++u) out = out.cwiseMin(member_scores[u]);
      return out;
    }
    case ScoreAggKind::Max: {
      Eigen::VectorXd out = member_scores.front();
      for (std::size_t u = 1; u < n; ++u) out = out.cwiseMax(member_scores[u]);
      return out;
    }
    case ScoreAggKind::RelevanceDisagreement: {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(len);
      for (const auto& s : member_scores) mean += s;
      mean /= static_cast<double>(n);
      Eigen::VectorXd disagreement = Eigen::VectorXd::Zero(len);
      if (n > 1) {
        std::size_t pairs = 0;
        for (std::size_t u = 0; u < n; ++u)
          for (std::size_t v = u + 1; v < n; ++v) {
            disagreement += (member_scores[u] - member_scores[v]).cwiseAbs();
            ++pairs;
          }
        disagreement /= static_cast<double>(pairs);
      }
      return strategy.w_rel * mean - strategy.w_dis * disagreement;
    }
  }
  throw std::logic_error("score_aggregate: unreachable");
}

/// Per-user item probabilities from the pre-trained single layer + head.
inline Eigen::VectorXd user_scores_from_encoder(const PretrainResult& pre, std::int32_t user,
                                                const InteractionMatrix& users) {
  if (user < 0 || user >= users.num_rows)
    throw std::invalid_argument("user_scores_from_encoder: unknown user");
  Eigen::VectorXd z1 = pre.b1;
  for (std::int32_t i : users.row(user)) z1 += pre.w1.row(i).transpose();
  Eigen::VectorXd h = z1.array().tanh();
  return softmax(pre.head * h);
}

/// Group ranking from score aggregation over the pre-trained per-user scorer.
inline std::vector<std::int32_t> score_aggregation_ranking(const PretrainResult& pre,
                                                           const GroupRecord& group,
                                                           const InteractionMatrix& users,
                                                           const AggregationStrategy& strategy) {
  std::vector<Eigen::VectorXd> member_scores;
  member_scores.reserve(group.members.size());
  for (auto u : group.members) member_scores.push_back(user_scores_from_encoder(pre, u, users));
  return rank_by_score(score_aggregate(member_scores, strategy));
}

// --- ablation harness -------------------------------------------------------

enum class AblationVariant { BaseLG, BaseLGLU, GroupimLGMI, UniformW, CosineW, NoPretrain, Full };

inline std::string to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::BaseLG: return "base_LG";
    case AblationVariant::BaseLGLU: return "base_LG_LU";
    case AblationVariant::GroupimLGMI: return "groupim_LG_MI";
    case AblationVariant::UniformW: return "uniform_w";
    case AblationVariant::CosineW: return "cosine_w";
    case AblationVariant::NoPretrain: return "no_pretrain";
    case AblationVariant::Full: return "full";
  }
  return "?";
}

inline AblationVariant ablation_variant_from_string(const std::string& s) {
  if (s == "base_LG") return AblationVariant::BaseLG;
  if (s == "base_LG_LU") return AblationVariant::BaseLGLU;
  if (s == "groupim_LG_MI") return AblationVariant::GroupimLGMI;
  if (s == "uniform_w") return AblationVariant::UniformW;
  if (s == "cosine_w") return AblationVariant::CosineW;
  if (s == "no_pretrain") return AblationVariant::NoPretrain;
  if (s == "full") return AblationVariant::Full;
  throw std::invalid_argument("unknown ablation variant: " + s);
}

inline TrainConfig variant_config(const TrainConfig& base, AblationVariant v) {
  TrainConfig cfg = base;
  switch (v) {
    case AblationVariant::BaseLG: cfg.mode = LossMode::BaseLG; break;
    case AblationVariant::BaseLGLU: cfg.mode = LossMode::BaseLGLU; break;
    case AblationVariant::GroupimLGMI: cfg.mode = LossMode::GroupimLGMI; break;
    case AblationVariant::UniformW: cfg.mode = LossMode::UniformW; break;
    case AblationVariant::CosineW: cfg.mode = LossMode::CosineW; break;
    case AblationVariant::NoPretrain:
      cfg.mode = LossMode::GroupimFull;
      cfg.pretrain = false;
      break;
    case AblationVariant::Full: cfg.mode = LossMode::GroupimFull; break;
  }
  return cfg;
}

struct AblationCell {
  std::map<std::size_t, double> ndcg;
  std::map<std::size_t, double> recall;
};

struct AblationRow {
  AblationVariant variant;
  std::map<std::uint64_t, AblationCell> per_seed;
  AblationCell mean;
};

/// Trains every variant on the same split with the same seeds and
/// evaluates test-set metrics, so rows differ only in the objective.
inline std::vector<AblationRow> run_ablation(const DatasetSplit& data, const TrainConfig& base,
                                             std::span<const AblationVariant> variants,
                                             std::span<const std::uint64_t> seeds,
                                             std::vector<std::size_t> ks) {
  if (seeds.empty()) throw std::invalid_argument("run_ablation: need at least one seed");
  if (variants.empty()) throw std::invalid_argument("run_ablation: need at least one variant");

  std::vector<AblationRow> rows;
  for (auto variant : variants) {
    AblationRow row;
    row.variant = variant;
    for (auto k : ks) {
      row.mean.ndcg[k] = 0.0;
      row.mean.recall[k] = 0.0;
    }
    for (auto seed : seeds) {
      TrainConfig cfg = variant_config(base, variant);
      cfg.seed = seed;
      auto trained = train(data, cfg);
      auto report = evaluate(trained.model, data.test_groups, data.user_matrix, ks);
      AblationCell cell;
      for (auto k : ks) {
        cell.ndcg[k] = report.ndcg.at(k);
        cell.recall[k] = report.recall.at(k);
        row.mean.ndcg[k] += report.ndcg.at(k);
        row.mean.recall[k] += report.recall.at(k);
      }
      row.per_seed[seed] = std::move(cell);
    }
    for (auto k : ks) {
      row.mean.ndcg[k] /= static_cast<double>(seeds.size());
      row.mean.recall[k] /= static_cast<double>(seeds.size());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace groupim
