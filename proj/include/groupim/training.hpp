#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "groupim/checkpoint.hpp"
#include "groupim/interactions.hpp"
#include "groupim/metrics.hpp"
#include "groupim/model.hpp"
#include "groupim/objectives.hpp"
#include "groupim/optimizer.hpp"
#include "groupim/rng.hpp"

namespace groupim {

struct TrainConfig {
  std::int32_t embed_dim = 64;
  double lambda = 1.0;
  double eta = 0.5;
  std::int32_t negatives_per_member = 5;
  AggregatorKind aggregator = AggregatorKind::Meanpool;
  double learning_rate = 1e-3;
  // Two-time-scale rule: the discriminator tensor trains faster than the
  // recommender so it tracks the moving encoder.
  double disc_lr_multiplier = 10.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::int32_t epochs = 30;
  std::int32_t pretrain_epochs = 5;
  std::int32_t batch_size_groups = 64;
  std::int32_t batch_size_users = 128;
  std::uint64_t seed = 1;
  LossMode mode = LossMode::GroupimFull;
  bool pretrain = true;

  void validate() const {
    if (embed_dim < 1) throw std::invalid_argument("embed_dim must be positive");
    if (lambda < 0.0 || lambda > 64.0)
      throw std::invalid_argument("lambda must lie in [0, 2^6]");
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("eta must be a probability");
    if (negatives_per_member < 1) throw std::invalid_argument("negatives per member must be >= 1");
    if (epochs < 0 || pretrain_epochs < 0) throw std::invalid_argument("epoch counts must be >= 0");
    if (batch_size_groups < 1 || batch_size_users < 1)
      throw std::invalid_argument("batch sizes must be positive");
    if (learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (disc_lr_multiplier <= 0.0)
      throw std::invalid_argument("discriminator lr multiplier must be positive");
  }

  AdamConfig adam() const { return {learning_rate, beta1, beta2, adam_eps}; }
  AdamConfig disc_adam() const {
    return {learning_rate * disc_lr_multiplier, beta1, beta2, adam_eps};
  }
  Hyperparams hyper() const { return {embed_dim, lambda, eta, negatives_per_member}; }
};

struct EpochRecord {
  std::int32_t epoch = 0;
  double l_g = 0.0;
  double l_u = 0.0;
  double l_ug = 0.0;
  double l_mi = 0.0;
  double total = 0.0;
  double val_ndcg20 = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct TrainResult {
  ModelState model;
  std::vector<EpochRecord> log;
  PretrainResult pretrain;
  std::int32_t best_epoch = 0;  // 0 = initial state
};

// --- encoder pre-training -------------------------------------------------

/// Trains tanh(W1^T x_u + b1) with a fresh multinomial head on X_U under
/// the user loss, starting from the same seeded initialization the full
/// model uses. pretrain_epochs = 0 returns the initialization unchanged.
inline PretrainResult pretrain_encoder(const InteractionMatrix& users, const TrainConfig& cfg) {
  cfg.validate();
  if (users.num_rows == 0) throw std::invalid_argument("pretrain_encoder: empty user matrix");

  ModelState init = init_params(users.num_items, cfg.aggregator, cfg.hyper(), cfg.seed);
  PretrainResult p{init.encoder.w1, init.encoder.b1, init.predictor.w_items};
  if (cfg.pretrain_epochs == 0) return p;

  AdamTensor<Eigen::MatrixXd> opt_w1, opt_head;
  AdamTensor<Eigen::VectorXd> opt_b1;
  const AdamConfig adam = cfg.adam();

  std::vector<std::int32_t> order(static_cast<std::size_t>(users.num_rows));
  std::iota(order.begin(), order.end(), 0);

  for (std::int32_t epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
    SplitMix64 rng(SplitMix64::stream(cfg.seed, 0x50524530ULL, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size_users)) {
      std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size_users));
      Eigen::MatrixXd g_w1 = Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols());
      Eigen::VectorXd g_b1 = Eigen::VectorXd::Zero(p.b1.size());
      Eigen::MatrixXd g_head = Eigen::MatrixXd::Zero(p.head.rows(), p.head.cols());
      bool any = false;
      for (std::size_t k = start; k < stop; ++k) {
        const auto& xu = users.row(order[k]);
        if (xu.empty()) continue;
        any = true;
        Eigen::VectorXd z1 = p.b1;
        for (std::int32_t i : xu) z1 += p.w1.row(i).transpose();
        Eigen::VectorXd h = z1.array().tanh();
        Eigen::VectorXd log_pi = log_softmax(p.head * h);
        double inv = 1.0 / static_cast<double>(xu.size());
        Eigen::VectorXd d_logits = log_pi.array().exp();
        for (std::int32_t i : xu) d_logits[i] -= inv;
        g_head.noalias() += d_logits * h.transpose();
        Eigen::VectorXd d_h = p.head.transpose() * d_logits;
        Eigen::VectorXd d_z1 = d_h.cwiseProduct((1.0 - h.array().square()).matrix());
        g_b1 += d_z1;
        for (std::int32_t i : xu) g_w1.row(i) += d_z1.transpose();
      }
      if (!any) continue;
      opt_w1.step(p.w1, g_w1, adam);
      opt_b1.step(p.b1, g_b1, adam);
      opt_head.step(p.head, g_head, adam);
    }
  }
  return p;
}

/// Value of L_U over all users for a (w1, b1, head) triple; used to verify
/// that pre-training descends.
inline double pretrain_user_loss(const InteractionMatrix& users, const PretrainResult& p) {
  double total = 0.0;
  for (std::int32_t u = 0; u < users.num_rows; ++u) {
    const auto& xu = users.row(u);
    if (xu.empty()) continue;
    Eigen::VectorXd z1 = p.b1;
    for (std::int32_t i : xu) z1 += p.w1.row(i).transpose();
    Eigen::VectorXd h = z1.array().tanh();
    Eigen::VectorXd log_pi = log_softmax(p.head * h);
    double lu = 0.0;
    for (std::int32_t i : xu) lu -= log_pi[i];
    total += lu / static_cast<double>(xu.size());
  }
  return total;
}

// --- alternating optimization ---------------------------------------------

/// Holds model, optimizer state and the two alternating update steps.
/// Step one (recommender): L_G (+ lambda L_UG or lambda L_U), discriminator
/// frozen and contextual weights stop-gradiented. Step two (discriminator):
/// L_MI, updating discriminator, encoder and aggregator but never the item
/// head.
class Trainer {
 public:
  Trainer(ModelState state, TrainConfig cfg) : state_(std::move(state)), cfg_(std::move(cfg)) {}

  const ModelState& state() const { return state_; }
  ModelState& state() { return state_; }

  LossReport recommender_step(const InteractionMatrix& users,
                              std::span<const GroupRecord> groups,
                              std::span<const std::int32_t> user_batch) {
    TermFlags flags;
    flags.g = true;
    flags.u = mode_uses_lu(cfg_.mode);
    flags.ug = mode_uses_ug(cfg_.mode);
    flags.mi = false;
    flags.lambda = cfg_.lambda;

    BatchInputs in;
    in.users = &users;
    in.groups = groups;
    in.user_batch = user_batch;

    std::vector<std::vector<double>> frozen;
    if (flags.ug) {
      frozen.reserve(groups.size());
      for (const auto& g : groups) {
        switch (weight_policy_for(cfg_.mode)) {
          case WeightPolicy::Contextual: frozen.push_back(contextual_weights(state_, g, users)); break;
          case WeightPolicy::Uniform: frozen.push_back(uniform_weights(g.members.size())); break;
          case WeightPolicy::Cosine: frozen.push_back(cosine_weights(g, users)); break;
        }
      }
      in.frozen_weights = &frozen;
    }

    LossReport rep = assemble_loss(in, state_, flags);
    const AdamConfig adam = cfg_.adam();
    opt_w1_.step(state_.encoder.w1, rep.grads.w1, adam);
    opt_b1_.step(state_.encoder.b1, rep.grads.b1, adam);
    opt_w2_.step(state_.encoder.w2, rep.grads.w2, adam);
    opt_b2_.step(state_.encoder.b2, rep.grads.b2, adam);
    opt_wagg_.step(state_.aggregator.w, rep.grads.w_agg, adam);
    if (state_.aggregator.b.size() > 0) opt_bagg_.step(state_.aggregator.b, rep.grads.b_agg, adam);
    if (state_.aggregator.h.size() > 0) opt_h_.step(state_.aggregator.h, rep.grads.h, adam);
    opt_wi_.step(state_.predictor.w_items, rep.grads.w_items, adam);
    return rep;
  }

  LossReport discriminator_step(const InteractionMatrix& users,
                                std::span<const GroupRecord> groups,
                                const std::vector<std::vector<std::int32_t>>& negatives) {
    TermFlags flags;
    flags.mi = true;

    BatchInputs in;
    in.users = &users;
    in.groups = groups;
    in.negatives = &negatives;

    LossReport rep = assemble_loss(in, state_, flags);
    const AdamConfig adam = cfg_.adam();
    opt_wd_.step(state_.discriminator.w, rep.grads.w_disc, cfg_.disc_adam());
    opt_w1_.step(state_.encoder.w1, rep.grads.w1, adam);
    opt_b1_.step(state_.encoder.b1, rep.grads.b1, adam);
    opt_w2_.step(state_.encoder.w2, rep.grads.w2, adam);
    opt_b2_.step(state_.encoder.b2, rep.grads.b2, adam);
    opt_wagg_.step(state_.aggregator.w, rep.grads.w_agg, adam);
    if (state_.aggregator.b.size() > 0) opt_bagg_.step(state_.aggregator.b, rep.grads.b_agg, adam);
    if (state_.aggregator.h.size() > 0) opt_h_.step(state_.aggregator.h, rep.grads.h, adam);
    return rep;
  }

 private:
  ModelState state_;
  TrainConfig cfg_;
  AdamTensor<Eigen::MatrixXd> opt_w1_, opt_w2_, opt_wagg_, opt_wi_, opt_wd_;
  AdamTensor<Eigen::VectorXd> opt_b1_, opt_b2_, opt_bagg_, opt_h_;
};

inline double mean_ndcg_at(const ModelState& state, const std::vector<GroupRecord>& groups,
                           const InteractionMatrix& users, std::size_t k) {
  if (groups.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (const auto& g : groups) acc += ndcg_at_k(rank_items(state, g, users), g.items, k);
  return acc / static_cast<double>(groups.size());
}

/// Full training run: seeded init, optional pre-training of the first
/// encoder layer, per-batch two-step alternation with fresh per-(epoch,
/// group) negatives, per-epoch validation, best-validation-NDCG@20 model
/// selection. Aborts if any loss turns non-finite.
inline TrainResult train(const DatasetSplit& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.train_groups.empty()) throw std::invalid_argument("train: no training groups");

  TrainResult result;
  ModelState init = init_params(data.user_matrix.num_items, cfg.aggregator, cfg.hyper(), cfg.seed);
  result.pretrain = PretrainResult{init.encoder.w1, init.encoder.b1, init.predictor.w_items};
  if (cfg.pretrain && cfg.pretrain_epochs > 0) {
    result.pretrain = pretrain_encoder(data.user_matrix, cfg);
    init.encoder.w1 = result.pretrain.w1;
    init.encoder.b1 = result.pretrain.b1;
  }

  Trainer trainer(std::move(init), cfg);
  result.model = trainer.state();
  result.best_epoch = 0;
  double best_val = mean_ndcg_at(trainer.state(), data.val_groups, data.user_matrix, 20);

  const std::size_t n_train = data.train_groups.size();
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::int32_t> user_order(static_cast<std::size_t>(data.user_matrix.num_rows));
  std::iota(user_order.begin(), user_order.end(), 0);
  std::size_t user_cursor = 0;

  const bool use_mi = mode_uses_mi(cfg.mode);
  const bool use_lu = mode_uses_lu(cfg.mode);

  for (std::int32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    SplitMix64 shuffle_rng(SplitMix64::stream(cfg.seed, 0x45504f43ULL, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    if (use_lu) {
      SplitMix64 urng(SplitMix64::stream(cfg.seed, 0x55534852ULL, static_cast<std::uint64_t>(epoch)));
      urng.shuffle(user_order);
      user_cursor = 0;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    double mi_weighted = 0.0;

    for (std::size_t start = 0; start < n_train;
         start += static_cast<std::size_t>(cfg.batch_size_groups)) {
      std::size_t stop = std::min(n_train, start + static_cast<std::size_t>(cfg.batch_size_groups));
      std::vector<GroupRecord> batch;
      batch.reserve(stop - start);
      std::vector<std::size_t> batch_ids;
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(data.train_groups[order[k]]);
        batch_ids.push_back(order[k]);
      }

      std::vector<std::int32_t> user_batch;
      if (use_lu) {
        for (std::int32_t k = 0; k < cfg.batch_size_users; ++k) {
          user_batch.push_back(user_order[user_cursor]);
          user_cursor = (user_cursor + 1) % user_order.size();
        }
      }

      LossReport rep1 = trainer.recommender_step(data.user_matrix, batch, user_batch);
      rec.l_g += rep1.l_g;
      rec.l_u += rep1.l_u;
      rec.l_ug += rep1.l_ug;
      if (!std::isfinite(rep1.total))
        throw std::runtime_error("train: diverged (non-finite recommender loss) at epoch " +
                                 std::to_string(epoch));

      if (use_mi) {
        std::vector<std::vector<std::int32_t>> negatives;
        negatives.reserve(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) {
          SplitMix64 nrng(SplitMix64::stream(cfg.seed ^ 0x4e454753ULL,
                                             static_cast<std::uint64_t>(epoch),
                                             static_cast<std::uint64_t>(batch_ids[k])));
          negatives.push_back(sample_negatives(batch[k], data.user_matrix, cfg.eta,
                                               cfg.negatives_per_member, nrng));
        }
        LossReport rep2 = trainer.discriminator_step(data.user_matrix, batch, negatives);
        mi_weighted += rep2.l_mi * static_cast<double>(batch.size());
        if (!std::isfinite(rep2.l_mi))
          throw std::runtime_error("train: diverged (non-finite MI loss) at epoch " +
                                   std::to_string(epoch));
      }
    }

    rec.l_mi = use_mi ? mi_weighted / static_cast<double>(n_train) : 0.0;
    rec.total = rec.l_g + cfg.lambda * (use_lu ? rec.l_u : rec.l_ug) + rec.l_mi;
    rec.val_ndcg20 = mean_ndcg_at(trainer.state(), data.val_groups, data.user_matrix, 20);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(rec);

    // Strictly-better replacement keeps the earliest best epoch; with no
    // validation groups (NaN scores) every epoch replaces, i.e. last wins.
    if (!(best_val >= rec.val_ndcg20)) {
      best_val = rec.val_ndcg20;
      result.model = trainer.state();
      result.best_epoch = epoch;
    }
  }
  return result;
}

// --- finite-difference gradient checking ------------------------------------

struct GradCheckEntry {
  std::string tensor;
  double max_rel_err = 0.0;
  std::int32_t coords_checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst = 0.0;
  bool passed(double tol) const { return worst < tol; }
};

namespace gradcheck_detail {

struct TensorView {
  std::string name;
  double* data;
  std::size_t size;
  const double* grad;
};

inline std::vector<TensorView> tensor_views(ModelState& s, const Gradients& g) {
  std::vector<TensorView> v;
  v.push_back({"encoder.w1", s.encoder.w1.data(), static_cast<std::size_t>(s.encoder.w1.size()), g.w1.data()});
  v.push_back({"encoder.b1", s.encoder.b1.data(), static_cast<std::size_t>(s.encoder.b1.size()), g.b1.data()});
  v.push_back({"encoder.w2", s.encoder.w2.data(), static_cast<std::size_t>(s.encoder.w2.size()), g.w2.data()});
  v.push_back({"encoder.b2", s.encoder.b2.data(), static_cast<std::size_t>(s.encoder.b2.size()), g.b2.data()});
  v.push_back({"aggregator.w", s.aggregator.w.data(), static_cast<std::size_t>(s.aggregator.w.size()), g.w_agg.data()});
  if (s.aggregator.b.size() > 0)
    v.push_back({"aggregator.b", s.aggregator.b.data(), static_cast<std::size_t>(s.aggregator.b.size()), g.b_agg.data()});
  if (s.aggregator.h.size() > 0)
    v.push_back({"aggregator.h", s.aggregator.h.data(), static_cast<std::size_t>(s.aggregator.h.size()), g.h.data()});
  v.push_back({"predictor.w_items", s.predictor.w_items.data(), static_cast<std::size_t>(s.predictor.w_items.size()), g.w_items.data()});
  v.push_back({"discriminator.w", s.discriminator.w.data(), static_cast<std::size_t>(s.discriminator.w.size()), g.w_disc.data()});
  return v;
}

}  // namespace gradcheck_detail

/// Central-difference check of `analytic` against the scalar function
/// `loss_fn(state)` coordinate by coordinate. At most `max_coords`
/// deterministically strided coordinates per tensor. Relative error uses
/// a 1e-6 magnitude floor so exactly-zero gradients compare cleanly.
template <typename LossFn>
GradCheckReport gradient_check(ModelState state, const Gradients& analytic, LossFn&& loss_fn,
                               double step = 1e-5, std::int32_t max_coords = 200) {
  GradCheckReport report;
  auto views = gradcheck_detail::tensor_views(state, analytic);
  for (auto& view : views) {
    GradCheckEntry entry;
    entry.tensor = view.name;
    if (view.size == 0) {
      report.entries.push_back(entry);
      continue;
    }
    std::size_t stride = 1;
    if (view.size > static_cast<std::size_t>(max_coords))
      stride = view.size / static_cast<std::size_t>(max_coords);
    for (std::size_t i = 0; i < view.size && entry.coords_checked < max_coords; i += stride) {
      double saved = view.data[i];
      view.data[i] = saved + step;
      double up = loss_fn(state);
      view.data[i] = saved - step;
      double down = loss_fn(state);
      view.data[i] = saved;
      double numeric = (up - down) / (2.0 * step);
      double a = view.grad[i];
      double rel = std::abs(a - numeric) / std::max({1e-6, std::abs(a), std::abs(numeric)});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      ++entry.coords_checked;
    }
    report.worst = std::max(report.worst, entry.max_rel_err);
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace groupim
