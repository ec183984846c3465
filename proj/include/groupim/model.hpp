#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "groupim/interactions.hpp"
#include "groupim/numerics.hpp"
#include "groupim/rng.hpp"

namespace groupim {

enum class AggregatorKind { Maxpool, Meanpool, Attention };

inline std::string to_string(AggregatorKind k) {
  switch (k) {
    case AggregatorKind::Maxpool: return "maxpool";
    case AggregatorKind::Meanpool: return "meanpool";
    case AggregatorKind::Attention: return "attention";
  }
  return "?";
}

inline AggregatorKind aggregator_from_string(const std::string& s) {
  if (s == "maxpool") return AggregatorKind::Maxpool;
  if (s == "meanpool") return AggregatorKind::Meanpool;
  if (s == "attention") return AggregatorKind::Attention;
  throw std::invalid_argument("unknown aggregator: " + s);
}

/// Two tanh layers over the binary interaction row:
///   e_u = tanh(W2^T tanh(W1^T x_u + b1) + b2)
struct EncoderParams {
  Eigen::MatrixXd w1;  // |I| x D
  Eigen::VectorXd b1;  // D
  Eigen::MatrixXd w2;  // D x D
  Eigen::VectorXd b2;  // D
};

/// Pooling kinds transform each member by tanh(W e_u + b) before an
/// element-wise mean or max; attention takes e_g = sum_u alpha_u W e_u with
/// alpha = softmax over h . (W e_u). Attention carries no bias.
struct AggregatorParams {
  AggregatorKind kind = AggregatorKind::Meanpool;
  Eigen::MatrixXd w;  // D x D
  Eigen::VectorXd b;  // D, pooling kinds only (size 0 for attention)
  Eigen::VectorXd h;  // D, attention only (size 0 otherwise)
};

/// Shared item head: pi(e) = softmax(W_I e), used for both user- and
/// group-side predictions.
struct PredictorParams {
  Eigen::MatrixXd w_items;  // |I| x D
};

/// Bilinear user-group scorer: D(e_u, e_g) = sigmoid(e_u^T W e_g).
struct DiscriminatorParams {
  Eigen::MatrixXd w;  // D x D
};

struct Hyperparams {
  std::int32_t embed_dim = 64;
  double lambda = 1.0;              // user-loss weight
  double eta = 0.5;                 // negative-sampling bias
  std::int32_t negatives_per_member = 5;
};

struct ModelState {
  EncoderParams encoder;
  AggregatorParams aggregator;
  PredictorParams predictor;
  DiscriminatorParams discriminator;
  Hyperparams hyper;

  std::int32_t num_items() const { return static_cast<std::int32_t>(encoder.w1.rows()); }
  std::int32_t embed_dim() const { return static_cast<std::int32_t>(encoder.w1.cols()); }
};

namespace detail {

inline void fill_uniform(Eigen::MatrixXd& m, double bound, SplitMix64& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
}

inline double fan_bound(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace detail

/// Uniform fan-based initialization: weights ~ U[-a, a] with
/// a = sqrt(6 / (fan_in + fan_out)); all biases zero. Fully determined by
/// the seed.
inline ModelState init_params(std::int32_t num_items, AggregatorKind kind, Hyperparams hyper,
                              std::uint64_t seed) {
  if (num_items < 1 || hyper.embed_dim < 1) throw std::invalid_argument("init_params: bad dims");
  const Eigen::Index n = num_items;
  const Eigen::Index d = hyper.embed_dim;
  SplitMix64 rng(SplitMix64::stream(seed, 0x494e4954ULL, 0));

  ModelState s;
  s.hyper = hyper;

  s.encoder.w1.resize(n, d);
  detail::fill_uniform(s.encoder.w1, detail::fan_bound(n, d), rng);
  s.encoder.b1 = Eigen::VectorXd::Zero(d);
  s.encoder.w2.resize(d, d);
  detail::fill_uniform(s.encoder.w2, detail::fan_bound(d, d), rng);
  s.encoder.b2 = Eigen::VectorXd::Zero(d);

  s.aggregator.kind = kind;
  s.aggregator.w.resize(d, d);
  detail::fill_uniform(s.aggregator.w, detail::fan_bound(d, d), rng);
  if (kind == AggregatorKind::Attention) {
    s.aggregator.b.resize(0);
    s.aggregator.h.resize(d);
    Eigen::MatrixXd tmp(d, 1);
    detail::fill_uniform(tmp, detail::fan_bound(d, 1), rng);
    s.aggregator.h = tmp.col(0);
  } else {
    s.aggregator.b = Eigen::VectorXd::Zero(d);
    s.aggregator.h.resize(0);
  }

  s.predictor.w_items.resize(n, d);
  detail::fill_uniform(s.predictor.w_items, detail::fan_bound(d, n), rng);

  s.discriminator.w.resize(d, d);
  detail::fill_uniform(s.discriminator.w, detail::fan_bound(d, d), rng);
  return s;
}

/// Forward cache for one user through the encoder.
struct EncoderForward {
  Eigen::VectorXd h;  // tanh(W1^T x + b1)
  Eigen::VectorXd e;  // tanh(W2^T h + b2)
};

inline EncoderForward encode_forward(const EncoderParams& p,
                                     const std::vector<std::int32_t>& items) {
  EncoderForward f;
  Eigen::VectorXd z1 = p.b1;
  for (std::int32_t i : items) {
    if (i < 0 || i >= p.w1.rows()) throw std::invalid_argument("encode_user: item index exceeds W1 rows");
    z1 += p.w1.row(i).transpose();
  }
  f.h = z1.array().tanh();
  f.e = (p.w2.transpose() * f.h + p.b2).array().tanh();
  return f;
}

inline Eigen::VectorXd encode_user(const EncoderParams& p, const std::vector<std::int32_t>& items) {
  return encode_forward(p, items).e;
}

/// Forward cache for an aggregation. `order` is the canonical member order
/// (lexicographic on embeddings): reductions run in that order so the
/// result is bitwise independent of the input permutation.
struct AggregateForward {
  std::vector<Eigen::VectorXd> t;    // pooling: tanh(W e + b); attention: v = W e
  std::vector<std::size_t> order;
  std::vector<std::size_t> winner;   // maxpool: canonical argmax per dimension
  Eigen::VectorXd alpha;             // attention weights, input order
  Eigen::VectorXd e_g;
};

inline AggregateForward aggregate_forward(const AggregatorParams& p,
                                          const std::vector<Eigen::VectorXd>& members) {
  if (members.empty()) throw std::invalid_argument("aggregate: empty member list");
  const std::size_t n = members.size();
  const Eigen::Index d = p.w.rows();

  AggregateForward f;
  f.order.resize(n);
  std::iota(f.order.begin(), f.order.end(), std::size_t{0});
  std::stable_sort(f.order.begin(), f.order.end(), [&](std::size_t a, std::size_t b) {
    return lex_less(members[a], members[b]);
  });

  f.t.resize(n);
  if (p.kind == AggregatorKind::Attention) {
    Eigen::VectorXd s(n);
    for (std::size_t u = 0; u < n; ++u) {
      f.t[u] = p.w * members[u];
      s[static_cast<Eigen::Index>(u)] = p.h.dot(f.t[u]);
    }
    double mx = s[static_cast<Eigen::Index>(f.order[0])];
    for (std::size_t u : f.order) mx = std::max(mx, s[static_cast<Eigen::Index>(u)]);
    double denom = 0.0;
    for (std::size_t u : f.order) denom += std::exp(s[static_cast<Eigen::Index>(u)] - mx);
    f.alpha.resize(static_cast<Eigen::Index>(n));
    for (std::size_t u = 0; u < n; ++u)
      f.alpha[static_cast<Eigen::Index>(u)] = std::exp(s[static_cast<Eigen::Index>(u)] - mx) / denom;
    f.e_g = Eigen::VectorXd::Zero(d);
    for (std::size_t u : f.order) f.e_g += f.alpha[static_cast<Eigen::Index>(u)] * f.t[u];
    return f;
  }

  for (std::size_t u = 0; u < n; ++u) f.t[u] = (p.w * members[u] + p.b).array().tanh();

  if (p.kind == AggregatorKind::Meanpool) {
    f.e_g = Eigen::VectorXd::Zero(d);
    for (std::size_t u : f.order) f.e_g += f.t[u];
    f.e_g /= static_cast<double>(n);
  } else {  // Maxpool
    f.winner.assign(static_cast<std::size_t>(d), f.order[0]);
    f.e_g = f.t[f.order[0]];
    for (std::size_t k = 1; k < n; ++k) {
      std::size_t u = f.order[k];
      for (Eigen::Index j = 0; j < d; ++j) {
        if (f.t[u][j] > f.e_g[j]) {
          f.e_g[j] = f.t[u][j];
          f.winner[static_cast<std::size_t>(j)] = u;
        }
      }
    }
  }
  return f;
}

inline Eigen::VectorXd aggregate(const AggregatorParams& p,
                                 const std::vector<Eigen::VectorXd>& members) {
  return aggregate_forward(p, members).e_g;
}

inline Eigen::VectorXd attention_weights(const AggregatorParams& p,
                                         const std::vector<Eigen::VectorXd>& members) {
  if (p.kind != AggregatorKind::Attention)
    throw std::invalid_argument("attention_weights: aggregator kind is not attention");
  return aggregate_forward(p, members).alpha;
}

inline Eigen::VectorXd item_logits(const PredictorParams& p, const Eigen::VectorXd& e) {
  if (e.size() != p.w_items.cols()) throw std::invalid_argument("predict_items: dimension mismatch");
  return p.w_items * e;
}

inline Eigen::VectorXd predict_items(const PredictorParams& p, const Eigen::VectorXd& e) {
  return softmax(item_logits(p, e));
}

inline double discriminator_logit(const DiscriminatorParams& p, const Eigen::VectorXd& e_u,
                                  const Eigen::VectorXd& e_g) {
  if (e_u.size() != p.w.rows() || e_g.size() != p.w.cols())
    throw std::invalid_argument("discriminate: dimension mismatch");
  return e_u.dot(p.w * e_g);
}

inline double discriminate(const DiscriminatorParams& p, const Eigen::VectorXd& e_u,
                           const Eigen::VectorXd& e_g) {
  return sigmoid(discriminator_logit(p, e_u, e_g));
}

/// Member embeddings for a group against the user matrix.
inline std::vector<Eigen::VectorXd> member_embeddings(const ModelState& state,
                                                      const GroupRecord& group,
                                                      const InteractionMatrix& users) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(group.members.size());
  for (auto u : group.members) {
    if (u < 0 || u >= users.num_rows)
      throw std::invalid_argument("unknown group member " + std::to_string(u));
    out.push_back(encode_user(state.encoder, users.row(u)));
  }
  return out;
}

inline Eigen::VectorXd group_embedding(const ModelState& state, const GroupRecord& group,
                                       const InteractionMatrix& users) {
  return aggregate(state.aggregator, member_embeddings(state, group, users));
}

}  // namespace groupim
