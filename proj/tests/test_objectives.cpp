#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "groupim/objectives.hpp"
#include "groupim/synthetic.hpp"

using namespace groupim;

TEST(GroupLoss, UniformDistributionGivesLogI) {
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(4, 0.25);
  EXPECT_NEAR(group_loss(pi, {0, 2}), std::log(4.0), 1e-12);
}

TEST(GroupLoss, PerfectPredictionApproachesZero) {
  for (double eps : {1e-3, 1e-6, 1e-9}) {
    Eigen::VectorXd pi(3);
    pi << 1.0 - eps, eps / 2, eps / 2;
    EXPECT_LT(group_loss(pi, {0}), 2.0 * eps + 1e-8);
  }
}

TEST(GroupLoss, MatchesLogArithmeticOracle) {
  Eigen::VectorXd pi(4);
  pi << 0.1, 0.2, 0.3, 0.4;
  double expected = -(std::log(0.1) + std::log(0.4)) / 2.0;
  EXPECT_NEAR(group_loss(pi, {0, 3}), expected, 1e-12);
  EXPECT_NEAR(expected, 1.6094379124341003, 1e-10);
}

TEST(GroupLoss, InvariantToItemReindexing) {
  Eigen::VectorXd pi(5);
  pi << 0.1, 0.25, 0.05, 0.4, 0.2;
  std::vector<std::int32_t> items{1, 3};
  // permutation: reverse items and pi together
  Eigen::VectorXd rev = pi.reverse();
  std::vector<std::int32_t> rev_items{4 - 3, 4 - 1};
  std::sort(rev_items.begin(), rev_items.end());
  EXPECT_NEAR(group_loss(pi, items), group_loss(rev, rev_items), 1e-15);
}

TEST(GroupLoss, EmptyItemsThrows) {
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(4, 0.25);
  EXPECT_THROW(group_loss(pi, {}), std::invalid_argument);
}

TEST(UserLoss, MatchesOracles) {
  Eigen::VectorXd uniform = Eigen::VectorXd::Constant(2, 0.5);
  EXPECT_NEAR(user_loss(uniform, {1}), std::log(2.0), 1e-12);

  Eigen::VectorXd uniform4 = Eigen::VectorXd::Constant(4, 0.25);
  EXPECT_NEAR(user_loss(uniform4, {0, 1, 2, 3}), std::log(4.0), 1e-12);

  Eigen::VectorXd pi(2);
  pi << 0.7, 0.3;
  EXPECT_NEAR(user_loss(pi, {1}), -std::log(0.3), 1e-12);
  EXPECT_NEAR(-std::log(0.3), 1.2039728043259361, 1e-10);
}

// --- sample_negatives ---------------------------------------------------------

namespace {

InteractionMatrix four_user_matrix() {
  // u0 member; u1 overlaps the group item, u2/u3 do not.
  InteractionMatrix m(4, 3);
  m.rows = {{0}, {0, 1}, {1}, {2}};
  return m;
}

GroupRecord singleton_group() {
  GroupRecord g;
  g.group_id = 0;
  g.members = {0};
  g.items = {0};
  return g;
}

std::map<std::int32_t, double> empirical(const InteractionMatrix& m, const GroupRecord& g,
                                         double eta, std::size_t draws, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::map<std::int32_t, double> freq;
  std::size_t done = 0;
  while (done < draws) {
    auto sample = sample_negatives(g, m, eta, 1, rng);
    for (auto u : sample) {
      freq[u] += 1.0;
      ++done;
    }
  }
  for (auto& [u, f] : freq) f /= static_cast<double>(done);
  return freq;
}

}  // namespace

TEST(SampleNegatives, BiasedDistributionMatchesClosedForm) {
  auto m = four_user_matrix();
  auto g = singleton_group();
  auto freq = empirical(m, g, 0.5, 100000, 42);
  // closed form: (5/7, 1/7, 1/7) over users 1,2,3
  double tv = 0.5 * (std::abs(freq[1] - 5.0 / 7.0) + std::abs(freq[2] - 1.0 / 7.0) +
                     std::abs(freq[3] - 1.0 / 7.0));
  EXPECT_LT(tv, 0.01);
  EXPECT_EQ(freq.count(0), 0u);  // members never sampled
}

TEST(SampleNegatives, ZeroEtaIsUniformOverNonMembers) {
  auto m = four_user_matrix();
  auto g = singleton_group();
  auto freq = empirical(m, g, 0.0, 100000, 43);
  double tv = 0.5 * (std::abs(freq[1] - 1.0 / 3.0) + std::abs(freq[2] - 1.0 / 3.0) +
                     std::abs(freq[3] - 1.0 / 3.0));
  EXPECT_LT(tv, 0.01);
}

TEST(SampleNegatives, CountIsNegativesTimesGroupSize) {
  auto ds = synthesize_dataset(20, 10, 5, 2, 0.1, 3);
  SplitMix64 rng(9);
  for (const auto& g : ds.groups) {
    auto negs = sample_negatives(g, ds.users, 0.5, 4, rng);
    EXPECT_EQ(negs.size(), 4 * g.members.size());
    for (auto u : negs)
      EXPECT_FALSE(std::binary_search(g.members.begin(), g.members.end(), u));
  }
}

TEST(SampleNegatives, GroupSpanningAllUsersThrows) {
  InteractionMatrix m(2, 2);
  m.rows = {{0}, {1}};
  GroupRecord g;
  g.members = {0, 1};
  g.items = {0};
  SplitMix64 rng(1);
  EXPECT_THROW(sample_negatives(g, m, 0.5, 1, rng), std::runtime_error);
}

// --- mi_loss -------------------------------------------------------------------

TEST(MiLoss, AllHalfScoresGiveLogTwo) {
  // sigma(0) = 0.5 for every pair; alpha normalization cancels.
  std::vector<MiGroupLogits> groups;
  groups.push_back({{0.0, 0.0}, {0.0, 0.0, 0.0}});
  groups.push_back({{0.0}, {0.0}});
  EXPECT_NEAR(mi_loss(groups), std::log(2.0), 1e-12);
}

TEST(MiLoss, PerfectDiscriminatorApproachesZero) {
  std::vector<MiGroupLogits> groups;
  groups.push_back({{30.0, 30.0}, {-30.0, -30.0}});
  EXPECT_LT(mi_loss(groups), 1e-12);
}

TEST(MiLoss, MatchesHandBceOracle) {
  // D_pos = 0.8, D_neg = 0.4 -> logits ln4, ln(2/3).
  std::vector<MiGroupLogits> groups;
  groups.push_back({{std::log(0.8 / 0.2)}, {std::log(0.4 / 0.6)}});
  double expected = -(std::log(0.8) + std::log(0.6)) / 2.0;
  EXPECT_NEAR(mi_loss(groups), expected, 1e-12);
  EXPECT_NEAR(expected, 0.3669845875401002, 1e-10);
}

TEST(MiLoss, FiniteForExtremeLogits) {
  std::vector<MiGroupLogits> groups;
  groups.push_back({{5000.0, -5000.0}, {5000.0, -5000.0}});
  EXPECT_TRUE(std::isfinite(mi_loss(groups)));
}

// --- weighted_user_group_loss ---------------------------------------------------

TEST(WeightedUserGroupLoss, ZeroWeightsGiveZero) {
  Eigen::VectorXd log_pi = Eigen::VectorXd::Constant(4, std::log(0.25));
  EXPECT_DOUBLE_EQ(weighted_user_group_loss(log_pi, {{0, 1}, {2}}, {0.0, 0.0}, 2), 0.0);
}

TEST(WeightedUserGroupLoss, MatchesHandOracle) {
  // one member, w=0.5, uniform pi over 2 items, x_u={0}, |x_g|=1
  Eigen::VectorXd log_pi = Eigen::VectorXd::Constant(2, std::log(0.5));
  double value = weighted_user_group_loss(log_pi, {{0}}, {0.5}, 1);
  EXPECT_NEAR(value, 0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(value, 0.34657359027997264, 1e-10);
}

TEST(WeightedUserGroupLoss, UniformWeightsEqualUnweightedSum) {
  Eigen::VectorXd log_pi(3);
  log_pi << std::log(0.2), std::log(0.3), std::log(0.5);
  std::vector<std::vector<std::int32_t>> items{{0, 2}, {1}};
  double weighted = weighted_user_group_loss(log_pi, items, {1.0, 1.0}, 2);
  double manual = (-(log_pi[0] + log_pi[2]) - log_pi[1]) / 2.0;
  EXPECT_NEAR(weighted, manual, 1e-12);
}

// --- cosine weights --------------------------------------------------------------

TEST(CosineWeight, MatchesClosedForm) {
  EXPECT_NEAR(cosine_weight({0, 1}, {1, 2}), 1.0 / std::sqrt(4.0), 1e-12);
  EXPECT_DOUBLE_EQ(cosine_weight({0, 1}, {2, 3}), 0.0);
  EXPECT_DOUBLE_EQ(cosine_weight({}, {0}), 0.0);
  EXPECT_NEAR(cosine_weight({0, 1, 2}, {0, 1, 2}), 1.0, 1e-12);
}

// --- combined_loss ---------------------------------------------------------------

namespace {

struct Fixture {
  SyntheticDataset ds;
  ModelState state;
  std::vector<std::vector<std::int32_t>> negatives;
  std::vector<std::vector<double>> frozen;
  std::vector<std::int32_t> user_batch;

  Fixture() : ds(synthesize_dataset(10, 8, 4, 2, 0.2, 5)) {
    state = init_params(8, AggregatorKind::Meanpool, {3, 0.5, 0.5, 2}, 6);
    for (std::size_t gi = 0; gi < ds.groups.size(); ++gi) {
      SplitMix64 rng(SplitMix64::stream(4, 1, gi));
      negatives.push_back(sample_negatives(ds.groups[gi], ds.users, 0.5, 2, rng));
      frozen.push_back(contextual_weights(state, ds.groups[gi], ds.users));
    }
    user_batch.resize(static_cast<std::size_t>(ds.users.num_rows));
    std::iota(user_batch.begin(), user_batch.end(), 0);
  }

  BatchInputs inputs() const {
    BatchInputs in;
    in.users = &ds.users;
    in.groups = std::span<const GroupRecord>(ds.groups);
    in.negatives = &negatives;
    in.user_batch = user_batch;
    in.frozen_weights = &frozen;
    return in;
  }
};

}  // namespace

TEST(CombinedLoss, FullEqualsTermByTermAssembly) {
  Fixture fx;
  double lambda = 0.5;
  auto full = combined_loss(fx.inputs(), fx.state, LossMode::GroupimFull, lambda);

  // term-by-term through the standalone value functions
  double l_g = 0.0, l_ug = 0.0;
  for (std::size_t gi = 0; gi < fx.ds.groups.size(); ++gi) {
    const auto& g = fx.ds.groups[gi];
    auto e_g = group_embedding(fx.state, g, fx.ds.users);
    auto pi = predict_items(fx.state.predictor, e_g);
    l_g += group_loss(pi, g.items);
    Eigen::VectorXd log_pi = pi.array().log();
    std::vector<std::vector<std::int32_t>> member_items;
    for (auto u : g.members) member_items.push_back(fx.ds.users.row(u));
    l_ug += weighted_user_group_loss(log_pi, member_items, fx.frozen[gi], g.items.size());
  }
  std::vector<MiGroupLogits> mi_groups;
  for (std::size_t gi = 0; gi < fx.ds.groups.size(); ++gi) {
    const auto& g = fx.ds.groups[gi];
    auto members = member_embeddings(fx.state, g, fx.ds.users);
    auto e_g = aggregate(fx.state.aggregator, members);
    MiGroupLogits entry;
    for (const auto& e_u : members)
      entry.positives.push_back(discriminator_logit(fx.state.discriminator, e_u, e_g));
    for (auto nu : fx.negatives[gi])
      entry.negatives.push_back(discriminator_logit(
          fx.state.discriminator, encode_user(fx.state.encoder, fx.ds.users.row(nu)), e_g));
    mi_groups.push_back(std::move(entry));
  }
  double l_mi = mi_loss(mi_groups);

  EXPECT_NEAR(full.l_g, l_g, 1e-10);
  EXPECT_NEAR(full.l_ug, l_ug, 1e-10);
  EXPECT_NEAR(full.l_mi, l_mi, 1e-10);
  EXPECT_NEAR(full.total, full.l_g + lambda * full.l_ug + full.l_mi, 1e-12);
}

TEST(CombinedLoss, BaseLgExcludesOtherTerms) {
  Fixture fx;
  BatchInputs in = fx.inputs();
  in.negatives = nullptr;
  in.frozen_weights = nullptr;
  auto rep = combined_loss(in, fx.state, LossMode::BaseLG, 1.0);
  EXPECT_EQ(rep.l_ug, 0.0);
  EXPECT_EQ(rep.l_mi, 0.0);
  EXPECT_EQ(rep.l_u, 0.0);
  EXPECT_DOUBLE_EQ(rep.total, rep.l_g);
  EXPECT_DOUBLE_EQ(rep.grads.w_disc.norm(), 0.0);
}

TEST(CombinedLoss, ZeroLambdaLgLuEqualsBaseLg) {
  Fixture fx;
  BatchInputs in = fx.inputs();
  in.negatives = nullptr;
  in.frozen_weights = nullptr;
  auto with_lu = combined_loss(in, fx.state, LossMode::BaseLGLU, 0.0);
  auto base = combined_loss(in, fx.state, LossMode::BaseLG, 0.0);
  EXPECT_NEAR(with_lu.total, base.total, 1e-15);
  EXPECT_LT((with_lu.grads.w_items - base.grads.w_items).norm(), 1e-15);
  EXPECT_LT((with_lu.grads.w1 - base.grads.w1).norm(), 1e-15);
}

TEST(CombinedLoss, DoublingLambdaDoublesUgGradientContribution) {
  Fixture fx;
  TermFlags ug_only;
  ug_only.ug = true;
  ug_only.lambda = 1.0;
  auto g1 = assemble_loss(fx.inputs(), fx.state, ug_only);
  ug_only.lambda = 2.0;
  auto g2 = assemble_loss(fx.inputs(), fx.state, ug_only);
  EXPECT_LT((g2.grads.w_items - 2.0 * g1.grads.w_items).norm(), 1e-12);
  EXPECT_LT((g2.grads.w1 - 2.0 * g1.grads.w1).norm(), 1e-12);
  EXPECT_NEAR(g2.total, 2.0 * g1.total, 1e-12);
}

TEST(CombinedLoss, ZeroWeightsProduceZeroUgGradient) {
  Fixture fx;
  std::vector<std::vector<double>> zeros;
  for (const auto& g : fx.ds.groups) zeros.push_back(std::vector<double>(g.members.size(), 0.0));
  BatchInputs in = fx.inputs();
  in.frozen_weights = &zeros;
  TermFlags ug_only;
  ug_only.ug = true;
  auto rep = assemble_loss(in, fx.state, ug_only);
  EXPECT_DOUBLE_EQ(rep.l_ug, 0.0);
  EXPECT_DOUBLE_EQ(rep.grads.w_items.norm(), 0.0);
  EXPECT_DOUBLE_EQ(rep.grads.w1.norm(), 0.0);
}

TEST(CombinedLoss, DeterministicGivenInputs) {
  Fixture fx;
  auto a = combined_loss(fx.inputs(), fx.state, LossMode::GroupimFull, 0.5);
  auto b = combined_loss(fx.inputs(), fx.state, LossMode::GroupimFull, 0.5);
  EXPECT_EQ(a.total, b.total);
  EXPECT_EQ((a.grads.w1 - b.grads.w1).norm(), 0.0);
  EXPECT_EQ((a.grads.w_disc - b.grads.w_disc).norm(), 0.0);
}

TEST(CombinedLoss, CosineModeUsesCosineWeights) {
  Fixture fx;
  BatchInputs in = fx.inputs();
  in.frozen_weights = nullptr;  // let the mode compute its own weights
  auto cosine_mode = combined_loss(in, fx.state, LossMode::CosineW, 1.0);

  std::vector<std::vector<double>> manual;
  for (const auto& g : fx.ds.groups) manual.push_back(cosine_weights(g, fx.ds.users));
  BatchInputs frozen_in = fx.inputs();
  frozen_in.frozen_weights = &manual;
  auto frozen = combined_loss(frozen_in, fx.state, LossMode::CosineW, 1.0);

  EXPECT_EQ(cosine_mode.l_ug, frozen.l_ug);
  EXPECT_EQ(cosine_mode.total, frozen.total);
  for (const auto& weights : manual)
    for (double w : weights) {
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, 1.0);
    }
}

TEST(CombinedLoss, MiLossFiniteForFiniteParameters) {
  Fixture fx;
  // Inflate parameters; logits get big but the loss must stay finite.
  ModelState hot = fx.state;
  hot.discriminator.w *= 500.0;
  TermFlags mi_only;
  mi_only.mi = true;
  auto rep = assemble_loss(fx.inputs(), hot, mi_only);
  EXPECT_TRUE(std::isfinite(rep.l_mi));
}
