#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "groupim/interactions.hpp"
#include "groupim/model.hpp"
#include "groupim/numerics.hpp"
#include "groupim/rng.hpp"

namespace groupim {

// ---------------------------------------------------------------------------
// Loss terms
//
//   L_G  = sum_g -(1/|x_g|) sum_i x_gi log pi_i(e_g)
//   L_U  = sum_u -(1/|x_u|) sum_i x_ui log pi_i(e_u)
//   L_UG = sum_g -(1/|x_g|) sum_i sum_{u in g} w(u,g) x_ui log pi_i(e_g)
//   L_MI = -(1/|G|) sum_g (1/(|g|+M_g)) [ sum_{u in g} log D_ug
//                                         + sum_j log(1 - D_neg_j,g) ]
//
// Objective variants assemble subsets of these; the contextual weights
// w(u,g) = D(e_u, e_g) are treated as constants during differentiation
// (recomputed each step, stop-gradient inside the step).
// ---------------------------------------------------------------------------

enum class LossMode { BaseLG, BaseLGLU, GroupimLGMI, GroupimFull, UniformW, CosineW };

inline std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::BaseLG: return "base_LG";
    case LossMode::BaseLGLU: return "base_LG_LU";
    case LossMode::GroupimLGMI: return "groupim_LG_MI";
    case LossMode::GroupimFull: return "full";
    case LossMode::UniformW: return "uniform_w";
    case LossMode::CosineW: return "cosine_w";
  }
  return "?";
}

inline LossMode loss_mode_from_string(const std::string& s) {
  if (s == "base_LG") return LossMode::BaseLG;
  if (s == "base_LG_LU") return LossMode::BaseLGLU;
  if (s == "groupim_LG_MI") return LossMode::GroupimLGMI;
  if (s == "full" || s == "groupim_full") return LossMode::GroupimFull;
  if (s == "uniform_w") return LossMode::UniformW;
  if (s == "cosine_w") return LossMode::CosineW;
  throw std::invalid_argument("unknown loss mode: " + s);
}

inline bool mode_uses_mi(LossMode m) {
  return m == LossMode::GroupimLGMI || m == LossMode::GroupimFull || m == LossMode::UniformW ||
         m == LossMode::CosineW;
}
inline bool mode_uses_ug(LossMode m) {
  return m == LossMode::GroupimFull || m == LossMode::UniformW || m == LossMode::CosineW;
}
inline bool mode_uses_lu(LossMode m) { return m == LossMode::BaseLGLU; }

// --- standalone loss values (value-only oracles over precomputed inputs) ---

/// Per-group normalized negative log-likelihood; batch L_G sums these.
inline double group_loss(const Eigen::VectorXd& pi, const std::vector<std::int32_t>& items) {
  if (items.empty()) throw std::invalid_argument("group_loss: empty item set");
  double acc = 0.0;
  for (std::int32_t i : items) {
    if (i < 0 || i >= pi.size()) throw std::invalid_argument("group_loss: item out of range");
    acc -= std::log(pi[i]);
  }
  return acc / static_cast<double>(items.size());
}

inline double user_loss(const Eigen::VectorXd& pi, const std::vector<std::int32_t>& items) {
  return group_loss(pi, items);
}

/// Per-group contextually weighted user loss. `weights` aligns with
/// `member_items`; both index the group's members.
inline double weighted_user_group_loss(const Eigen::VectorXd& log_pi,
                                       const std::vector<std::vector<std::int32_t>>& member_items,
                                       const std::vector<double>& weights,
                                       std::size_t group_item_count) {
  if (group_item_count == 0) throw std::invalid_argument("weighted_user_group_loss: empty x_g");
  if (member_items.size() != weights.size())
    throw std::invalid_argument("weighted_user_group_loss: weight/member mismatch");
  double acc = 0.0;
  for (std::size_t u = 0; u < member_items.size(); ++u) {
    double member_sum = 0.0;
    for (std::int32_t i : member_items[u]) member_sum -= log_pi[i];
    acc += weights[u] * member_sum;
  }
  return acc / static_cast<double>(group_item_count);
}

/// Mean-over-groups alpha-normalized noise-contrastive BCE, computed from
/// raw bilinear logits so finite parameters can never produce a non-finite
/// loss. One entry per group: logits of positive pairs then negatives.
struct MiGroupLogits {
  std::vector<double> positives;
  std::vector<double> negatives;
};

inline double mi_loss(const std::vector<MiGroupLogits>& groups) {
  if (groups.empty()) throw std::invalid_argument("mi_loss: no groups");
  double total = 0.0;
  for (const auto& g : groups) {
    double alpha = static_cast<double>(g.positives.size() + g.negatives.size());
    if (alpha == 0.0) throw std::invalid_argument("mi_loss: group with no pairs");
    double acc = 0.0;
    for (double s : g.positives) acc += softplus(-s);  // -log sigmoid(s)
    for (double s : g.negatives) acc += softplus(s);   // -log (1 - sigmoid(s))
    total += acc / alpha;
  }
  return total / static_cast<double>(groups.size());
}

// --- preference-biased negative sampling ---

/// Unnormalized sampling weight over non-members:
///   P(u~|g)  proportional to  eta * 1(x_u . x_g > 0) + (1 - eta)/|U|.
/// Draws m * |g| users i.i.d. with replacement.
inline std::vector<std::int32_t> sample_negatives(const GroupRecord& group,
                                                  const InteractionMatrix& users, double eta,
                                                  std::int32_t m, SplitMix64& rng) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("eta must be in [0,1]");
  if (m < 0) throw std::invalid_argument("negatives per member must be >= 0");
  const double uniform_part = (1.0 - eta) / static_cast<double>(users.num_rows);

  auto overlaps = [&](std::int32_t u) {
    const auto& xu = users.row(u);
    const auto& xg = group.items;
    std::size_t a = 0, b = 0;
    while (a < xu.size() && b < xg.size()) {
      if (xu[a] == xg[b]) return true;
      if (xu[a] < xg[b]) ++a;
      else ++b;
    }
    return false;
  };

  std::vector<std::int32_t> candidates;
  std::vector<double> cumulative;
  double total = 0.0;
  std::size_t mi = 0;
  for (std::int32_t u = 0; u < users.num_rows; ++u) {
    if (mi < group.members.size() && group.members[mi] == u) {
      ++mi;
      continue;
    }
    double w = (overlaps(u) ? eta : 0.0) + uniform_part;
    if (w <= 0.0) continue;
    total += w;
    candidates.push_back(u);
    cumulative.push_back(total);
  }
  if (candidates.empty())
    throw std::runtime_error("sample_negatives: no non-member user has sampling mass");

  std::size_t n_draws = static_cast<std::size_t>(m) * group.members.size();
  std::vector<std::int32_t> out;
  out.reserve(n_draws);
  for (std::size_t k = 0; k < n_draws; ++k) {
    double r = rng.uniform01() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
    if (idx >= candidates.size()) idx = candidates.size() - 1;
    out.push_back(candidates[idx]);
  }
  return out;
}

// --- contextual / fixed weight policies ---

/// Contextual weights w(u,g) = D(e_u, e_g) at the current parameters.
inline std::vector<double> contextual_weights(const ModelState& state, const GroupRecord& group,
                                              const InteractionMatrix& users) {
  auto members = member_embeddings(state, group, users);
  auto e_g = aggregate(state.aggregator, members);
  std::vector<double> w;
  w.reserve(members.size());
  for (const auto& e_u : members) w.push_back(discriminate(state.discriminator, e_u, e_g));
  return w;
}

/// Cosine similarity of the binary rows x_u and x_g, clamped to [0,1].
inline double cosine_weight(const std::vector<std::int32_t>& xu,
                            const std::vector<std::int32_t>& xg) {
  if (xu.empty() || xg.empty()) return 0.0;
  std::size_t a = 0, b = 0, inter = 0;
  while (a < xu.size() && b < xg.size()) {
    if (xu[a] == xg[b]) {
      ++inter;
      ++a;
      ++b;
    } else if (xu[a] < xg[b]) {
      ++a;
    } else {
      ++b;
    }
  }
  double c = static_cast<double>(inter) /
             std::sqrt(static_cast<double>(xu.size()) * static_cast<double>(xg.size()));
  return std::clamp(c, 0.0, 1.0);
}

inline std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0); }

inline std::vector<double> cosine_weights(const GroupRecord& group,
                                          const InteractionMatrix& users) {
  std::vector<double> w;
  w.reserve(group.members.size());
  for (auto u : group.members) w.push_back(cosine_weight(users.row(u), group.items));
  return w;
}

// --- gradient accumulator ---

struct Gradients {
  Eigen::MatrixXd w1, w2, w_agg, w_items, w_disc;
  Eigen::VectorXd b1, b2, b_agg, h;

  static Gradients zeros_like(const ModelState& s) {
    Gradients g;
    g.w1 = Eigen::MatrixXd::Zero(s.encoder.w1.rows(), s.encoder.w1.cols());
    g.b1 = Eigen::VectorXd::Zero(s.encoder.b1.size());
    g.w2 = Eigen::MatrixXd::Zero(s.encoder.w2.rows(), s.encoder.w2.cols());
    g.b2 = Eigen::VectorXd::Zero(s.encoder.b2.size());
    g.w_agg = Eigen::MatrixXd::Zero(s.aggregator.w.rows(), s.aggregator.w.cols());
    g.b_agg = Eigen::VectorXd::Zero(s.aggregator.b.size());
    g.h = Eigen::VectorXd::Zero(s.aggregator.h.size());
    g.w_items = Eigen::MatrixXd::Zero(s.predictor.w_items.rows(), s.predictor.w_items.cols());
    g.w_disc = Eigen::MatrixXd::Zero(s.discriminator.w.rows(), s.discriminator.w.cols());
    return g;
  }
};

namespace backward {

inline void encoder(const EncoderParams& p, const std::vector<std::int32_t>& items,
                    const EncoderForward& f, const Eigen::VectorXd& d_e, Gradients& g) {
  Eigen::VectorXd d_z2 = d_e.cwiseProduct((1.0 - f.e.array().square()).matrix());
  g.w2.noalias() += f.h * d_z2.transpose();
  g.b2 += d_z2;
  Eigen::VectorXd d_h = p.w2 * d_z2;
  Eigen::VectorXd d_z1 = d_h.cwiseProduct((1.0 - f.h.array().square()).matrix());
  g.b1 += d_z1;
  for (std::int32_t i : items) g.w1.row(i) += d_z1.transpose();
}

/// Distributes d(e_g) to the aggregator parameters and each member
/// embedding; d_members must be pre-sized with zero vectors.
inline void aggregator(const AggregatorParams& p, const std::vector<Eigen::VectorXd>& members,
                       const AggregateForward& f, const Eigen::VectorXd& d_eg, Gradients& g,
                       std::vector<Eigen::VectorXd>& d_members) {
  const std::size_t n = members.size();
  if (p.kind == AggregatorKind::Attention) {
    // c_u = d_eg . v_u ; gamma = softmax backward ; d_v = alpha d_eg + gamma h
    Eigen::VectorXd c(n);
    for (std::size_t u = 0; u < n; ++u) c[static_cast<Eigen::Index>(u)] = d_eg.dot(f.t[u]);
    double mixed = 0.0;
    for (std::size_t u = 0; u < n; ++u)
      mixed += f.alpha[static_cast<Eigen::Index>(u)] * c[static_cast<Eigen::Index>(u)];
    for (std::size_t u = 0; u < n; ++u) {
      double gamma = f.alpha[static_cast<Eigen::Index>(u)] * (c[static_cast<Eigen::Index>(u)] - mixed);
      Eigen::VectorXd d_v = f.alpha[static_cast<Eigen::Index>(u)] * d_eg + gamma * p.h;
      g.h += gamma * f.t[u];
      g.w_agg.noalias() += d_v * members[u].transpose();
      d_members[u] += p.w.transpose() * d_v;
    }
    return;
  }

  for (std::size_t u = 0; u < n; ++u) {
    Eigen::VectorXd d_t;
    if (p.kind == AggregatorKind::Meanpool) {
      d_t = d_eg / static_cast<double>(n);
    } else {
      d_t = Eigen::VectorXd::Zero(d_eg.size());
      for (Eigen::Index j = 0; j < d_eg.size(); ++j)
        if (f.winner[static_cast<std::size_t>(j)] == u) d_t[j] = d_eg[j];
    }
    Eigen::VectorXd d_a = d_t.cwiseProduct((1.0 - f.t[u].array().square()).matrix());
    g.w_agg.noalias() += d_a * members[u].transpose();
    g.b_agg += d_a;
    d_members[u] += p.w.transpose() * d_a;
  }
}

}  // namespace backward

// --- batch assembly ---

struct TermFlags {
  bool g = false;
  bool u = false;
  bool ug = false;
  bool mi = false;
  double lambda = 1.0;  // scales l_ug (or l_u in the static variant)
};

enum class WeightPolicy { Contextual, Uniform, Cosine };

inline WeightPolicy weight_policy_for(LossMode m) {
  switch (m) {
    case LossMode::UniformW: return WeightPolicy::Uniform;
    case LossMode::CosineW: return WeightPolicy::Cosine;
    default: return WeightPolicy::Contextual;
  }
}

struct BatchInputs {
  const InteractionMatrix* users = nullptr;
  std::span<const GroupRecord> groups;
  // Aligned with `groups`; required when the MI term is active.
  const std::vector<std::vector<std::int32_t>>* negatives = nullptr;
  // Users contributing L_U (static variant / pretraining path).
  std::span<const std::int32_t> user_batch;
  // When set, overrides the weight policy with externally fixed weights
  // (one vector per group). Used by training steps and gradient checks so
  // the stop-gradient semantics are explicit.
  const std::vector<std::vector<double>>* frozen_weights = nullptr;
};

struct LossReport {
  double l_g = 0.0;
  double l_u = 0.0;
  double l_ug = 0.0;
  double l_mi = 0.0;
  double total = 0.0;
  Gradients grads;
};

/// Forward + exact backward for the selected terms over one batch.
/// Deterministic sequential reduction: groups in order, members in order.
inline LossReport assemble_loss(const BatchInputs& in, const ModelState& state,
                                const TermFlags& flags,
                                WeightPolicy wpol = WeightPolicy::Contextual) {
  if (in.users == nullptr) throw std::invalid_argument("assemble_loss: user matrix required");
  if (flags.mi && in.negatives == nullptr)
    throw std::invalid_argument("assemble_loss: MI term requires negatives");
  if (flags.mi && in.negatives->size() != in.groups.size())
    throw std::invalid_argument("assemble_loss: negatives misaligned with groups");
  if (flags.ug && in.frozen_weights != nullptr &&
      in.frozen_weights->size() != in.groups.size())
    throw std::invalid_argument("assemble_loss: frozen weights misaligned with groups");

  LossReport rep;
  rep.grads = Gradients::zeros_like(state);
  const auto& users = *in.users;
  const std::size_t n_groups = in.groups.size();

  for (std::size_t gi = 0; gi < n_groups; ++gi) {
    const GroupRecord& group = in.groups[gi];
    if (group.items.empty()) throw std::invalid_argument("assemble_loss: group with empty items");

    std::vector<EncoderForward> enc(group.members.size());
    std::vector<Eigen::VectorXd> emb(group.members.size());
    for (std::size_t u = 0; u < group.members.size(); ++u) {
      enc[u] = encode_forward(state.encoder, users.row(group.members[u]));
      emb[u] = enc[u].e;
    }
    auto agg = aggregate_forward(state.aggregator, emb);

    Eigen::VectorXd d_eg = Eigen::VectorXd::Zero(agg.e_g.size());
    std::vector<Eigen::VectorXd> d_members(group.members.size(),
                                           Eigen::VectorXd::Zero(agg.e_g.size()));

    if (flags.g || flags.ug) {
      Eigen::VectorXd logits = item_logits(state.predictor, agg.e_g);
      Eigen::VectorXd log_pi = log_softmax(logits);
      Eigen::VectorXd pi = log_pi.array().exp();
      Eigen::VectorXd d_logits = Eigen::VectorXd::Zero(logits.size());

      if (flags.g) {
        double inv = 1.0 / static_cast<double>(group.items.size());
        double lg = 0.0;
        for (std::int32_t i : group.items) lg -= log_pi[i];
        rep.l_g += lg * inv;
        d_logits += pi;
        for (std::int32_t i : group.items) d_logits[i] -= inv;
      }

      if (flags.ug) {
        std::vector<double> weights;
        if (in.frozen_weights != nullptr) {
          weights = (*in.frozen_weights)[gi];
          if (weights.size() != group.members.size())
            throw std::invalid_argument("assemble_loss: frozen weight count mismatch");
        } else {
          switch (wpol) {
            case WeightPolicy::Contextual:
              weights.reserve(group.members.size());
              for (const auto& e_u : emb)
                weights.push_back(discriminate(state.discriminator, e_u, agg.e_g));
              break;
            case WeightPolicy::Uniform:
              weights = uniform_weights(group.members.size());
              break;
            case WeightPolicy::Cosine:
              weights = cosine_weights(group, users);
              break;
          }
        }
        // q_i = sum_u w_u x_ui / |x_g| ; d logits = lambda (S pi - q)
        double inv = 1.0 / static_cast<double>(group.items.size());
        Eigen::VectorXd q = Eigen::VectorXd::Zero(logits.size());
        double lug = 0.0;
        for (std::size_t u = 0; u < group.members.size(); ++u) {
          const auto& xu = users.row(group.members[u]);
          double member_sum = 0.0;
          for (std::int32_t i : xu) {
            q[i] += weights[u] * inv;
            member_sum -= log_pi[i];
          }
          lug += weights[u] * member_sum * inv;
        }
        rep.l_ug += lug;
        double mass = q.sum();
        d_logits += flags.lambda * (mass * pi - q);
      }

      rep.grads.w_items.noalias() += d_logits * agg.e_g.transpose();
      d_eg += state.predictor.w_items.transpose() * d_logits;
    }

    if (flags.mi) {
      const auto& negs = (*in.negatives)[gi];
      double alpha = static_cast<double>(group.members.size() + negs.size());
      double coef = 1.0 / (alpha * static_cast<double>(n_groups));
      double acc = 0.0;

      for (std::size_t u = 0; u < group.members.size(); ++u) {
        double s = discriminator_logit(state.discriminator, emb[u], agg.e_g);
        acc += softplus(-s);
        double gd = (sigmoid(s) - 1.0) * coef;
        rep.grads.w_disc.noalias() += gd * emb[u] * agg.e_g.transpose();
        d_members[u] += gd * (state.discriminator.w * agg.e_g);
        d_eg += gd * (state.discriminator.w.transpose() * emb[u]);
      }
      for (std::int32_t nu : negs) {
        auto nf = encode_forward(state.encoder, users.row(nu));
        double s = discriminator_logit(state.discriminator, nf.e, agg.e_g);
        acc += softplus(s);
        double gd = sigmoid(s) * coef;
        rep.grads.w_disc.noalias() += gd * nf.e * agg.e_g.transpose();
        Eigen::VectorXd d_neg = gd * (state.discriminator.w * agg.e_g);
        d_eg += gd * (state.discriminator.w.transpose() * nf.e);
        backward::encoder(state.encoder, users.row(nu), nf, d_neg, rep.grads);
      }
      rep.l_mi += acc / alpha / static_cast<double>(n_groups);
    }

    backward::aggregator(state.aggregator, emb, agg, d_eg, rep.grads, d_members);
    for (std::size_t u = 0; u < group.members.size(); ++u)
      backward::encoder(state.encoder, users.row(group.members[u]), enc[u], d_members[u],
                        rep.grads);
  }

  if (flags.u) {
    for (std::int32_t uid : in.user_batch) {
      const auto& xu = users.row(uid);
      if (xu.empty()) continue;  // empty histories carry no user loss
      auto f = encode_forward(state.encoder, xu);
      Eigen::VectorXd logits = item_logits(state.predictor, f.e);
      Eigen::VectorXd log_pi = log_softmax(logits);
      double inv = 1.0 / static_cast<double>(xu.size());
      double lu = 0.0;
      for (std::int32_t i : xu) lu -= log_pi[i];
      rep.l_u += lu * inv;

      Eigen::VectorXd d_logits = log_pi.array().exp();
      for (std::int32_t i : xu) d_logits[i] -= inv;
      d_logits *= flags.lambda;
      rep.grads.w_items.noalias() += d_logits * f.e.transpose();
      Eigen::VectorXd d_e = state.predictor.w_items.transpose() * d_logits;
      backward::encoder(state.encoder, xu, f, d_e, rep.grads);
    }
  }

  rep.total = (flags.g ? rep.l_g : 0.0) + (flags.u ? flags.lambda * rep.l_u : 0.0) +
              (flags.ug ? flags.lambda * rep.l_ug : 0.0) + (flags.mi ? rep.l_mi : 0.0);
  return rep;
}

/// Assembles exactly the terms of the selected objective variant.
inline LossReport combined_loss(const BatchInputs& in, const ModelState& state, LossMode mode,
                                double lambda) {
  TermFlags flags;
  flags.g = true;
  flags.u = mode_uses_lu(mode);
  flags.ug = mode_uses_ug(mode);
  flags.mi = mode_uses_mi(mode);
  flags.lambda = lambda;
  return assemble_loss(in, state, flags, weight_policy_for(mode));
}

}  // namespace groupim
