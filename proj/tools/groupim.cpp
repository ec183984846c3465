// Command-line pipeline: dataset synthesis/ingestion, splitting, encoder
// pre-training, training, evaluation, ablation, analytics, gradient
// checking and a lambda sweep, driven by a key=value config file plus flag
// overrides. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "groupim/baselines.hpp"
#include "groupim/checkpoint.hpp"
#include "groupim/evaluation.hpp"
#include "groupim/groups.hpp"
#include "groupim/io.hpp"
#include "groupim/metrics.hpp"
#include "groupim/model.hpp"
#include "groupim/objectives.hpp"
#include "groupim/synthetic.hpp"
#include "groupim/training.hpp"

namespace {

using namespace groupim;

struct RunConfig {
  // paths
  std::string interactions;
  std::string groups_file;
  std::string checkins;
  std::string social;
  std::string checkpoint;
  std::string pretrain_ckpt;
  std::string out = ".";
  // universe sizes for file parsing
  std::int32_t num_users = 0;
  std::int32_t num_items = 0;
  // ingestion
  std::int32_t min_count = 0;  // 0 = no filtering
  std::int64_t window_seconds = 900;
  // synthesis
  std::int32_t synth_users = 200;
  std::int32_t synth_items = 100;
  std::int32_t synth_groups = 500;
  std::int32_t synth_clusters = 4;
  double synth_noise = 0.05;
  // split
  double ratio_train = 0.7;
  double ratio_val = 0.1;
  double ratio_test = 0.2;
  // training
  std::int32_t embed_dim = 64;
  double lambda = 1.0;
  double eta = 0.5;
  std::int32_t negatives = 5;
  std::string aggregator = "meanpool";
  double lr = 1e-3;
  double disc_lr_multiplier = 10.0;
  std::int32_t epochs = 30;
  std::int32_t pretrain_epochs = 5;
  std::int32_t batch_groups = 64;
  std::int32_t batch_users = 128;
  std::uint64_t seed = 1;
  std::string mode = "full";
  bool no_pretrain = false;
  // evaluation / ablation
  std::vector<std::size_t> ks = {20, 50};
  std::vector<std::string> bins = {"size"};
  bool mi_variation = false;
  std::vector<std::string> variants = {"full", "base_LG"};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<double> lambdas = {0.0625, 0.25, 1.0, 4.0, 16.0, 64.0};
  // gradcheck
  bool inject_fault = false;

  TrainConfig train_config() const {
    TrainConfig cfg;
    cfg.embed_dim = embed_dim;
    cfg.lambda = lambda;
    cfg.eta = eta;
    cfg.negatives_per_member = negatives;
    cfg.aggregator = aggregator_from_string(aggregator);
    cfg.learning_rate = lr;
    cfg.disc_lr_multiplier = disc_lr_multiplier;
    cfg.epochs = epochs;
    cfg.pretrain_epochs = pretrain_epochs;
    cfg.batch_size_groups = batch_groups;
    cfg.batch_size_users = batch_users;
    cfg.seed = seed;
    cfg.mode = loss_mode_from_string(mode);
    cfg.pretrain = !no_pretrain;
    cfg.validate();
    return cfg;
  }
};

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

void echo_effective_config(const RunConfig& c, const std::string& command) {
  std::filesystem::create_directories(c.out);
  std::ofstream out(std::filesystem::path(c.out) / "effective_config.txt");
  out << "format_version=1\n";
  out << "command=" << command << '\n';
  out << "interactions=" << c.interactions << '\n';
  out << "groups=" << c.groups_file << '\n';
  out << "checkins=" << c.checkins << '\n';
  out << "social=" << c.social << '\n';
  out << "checkpoint=" << c.checkpoint << '\n';
  out << "pretrain_checkpoint=" << c.pretrain_ckpt << '\n';
  out << "out=" << c.out << '\n';
  out << "num_users=" << c.num_users << '\n';
  out << "num_items=" << c.num_items << '\n';
  out << "min_count=" << c.min_count << '\n';
  out << "window_seconds=" << c.window_seconds << '\n';
  out << "synth_users=" << c.synth_users << '\n';
  out << "synth_items=" << c.synth_items << '\n';
  out << "synth_groups=" << c.synth_groups << '\n';
  out << "synth_clusters=" << c.synth_clusters << '\n';
  out << "synth_noise=" << c.synth_noise << '\n';
  out << "ratios=" << c.ratio_train << ',' << c.ratio_val << ',' << c.ratio_test << '\n';
  out << "embed_dim=" << c.embed_dim << '\n';
  out << "lambda=" << c.lambda << '\n';
  out << "eta=" << c.eta << '\n';
  out << "negatives=" << c.negatives << '\n';
  out << "aggregator=" << c.aggregator << '\n';
  out << "lr=" << c.lr << '\n';
  out << "disc_lr_multiplier=" << c.disc_lr_multiplier << '\n';
  out << "epochs=" << c.epochs << '\n';
  out << "pretrain_epochs=" << c.pretrain_epochs << '\n';
  out << "batch_groups=" << c.batch_groups << '\n';
  out << "batch_users=" << c.batch_users << '\n';
  out << "seed=" << c.seed << '\n';
  out << "mode=" << c.mode << '\n';
  out << "no_pretrain=" << (c.no_pretrain ? 1 : 0) << '\n';
  out << "k=" << join_sizes(c.ks) << '\n';
}

InteractionMatrix require_interactions(const RunConfig& c) {
  if (c.interactions.empty()) throw CLI::ValidationError("--interactions is required");
  if (c.num_users <= 0 || c.num_items <= 0)
    throw CLI::ValidationError("--num-users and --num-items are required");
  return load_interactions(c.interactions, c.num_users, c.num_items);
}

std::vector<GroupRecord> require_groups(const RunConfig& c) {
  if (c.groups_file.empty()) throw CLI::ValidationError("--groups is required");
  return load_groups(c.groups_file, c.num_users, c.num_items);
}

void print_dataset_stats(const InteractionMatrix& users, const std::vector<GroupRecord>& groups) {
  std::size_t gi_interactions = 0, member_total = 0;
  for (const auto& g : groups) {
    gi_interactions += g.items.size();
    member_total += g.members.size();
  }
  std::size_t ui = users.total_interactions();
  std::printf("# users             %d\n", users.num_rows);
  std::printf("# items             %d\n", users.num_items);
  std::printf("# groups            %zu\n", groups.size());
  std::printf("# U-I interactions  %zu\n", ui);
  std::printf("# G-I interactions  %zu\n", gi_interactions);
  std::printf("avg. # items/user   %.2f\n", users.num_rows ? double(ui) / users.num_rows : 0.0);
  std::printf("avg. # items/group  %.2f\n", groups.empty() ? 0.0 : double(gi_interactions) / groups.size());
  std::printf("avg. group size     %.2f\n", groups.empty() ? 0.0 : double(member_total) / groups.size());
}

int cmd_synth(const RunConfig& c) {
  auto ds = synthesize_dataset(c.synth_users, c.synth_items, c.synth_groups, c.synth_clusters,
                               c.synth_noise, c.seed);
  std::filesystem::create_directories(c.out);
  save_interactions((std::filesystem::path(c.out) / "interactions.tsv").string(), ds.users);
  save_groups((std::filesystem::path(c.out) / "groups.tsv").string(), ds.groups);
  echo_effective_config(c, "synth");
  print_dataset_stats(ds.users, ds.groups);
  return 0;
}

int cmd_ingest(const RunConfig& c) {
  if (c.checkins.empty() || c.social.empty())
    throw CLI::ValidationError("--checkins and --social are required");
  if (c.num_users <= 0 || c.num_items <= 0)
    throw CLI::ValidationError("--num-users and --num-items (POI count) are required");
  auto log = load_checkins(c.checkins, c.num_users, c.num_items);
  auto graph = load_social(c.social, c.num_users);
  auto built = construct_groups(log, graph, c.window_seconds);

  InteractionMatrix users = built.user_matrix;
  std::vector<GroupRecord> groups = built.groups;
  if (c.min_count > 0) {
    auto filtered = filter_min_interactions(users, static_cast<std::size_t>(c.min_count));
    groups = remap_groups(groups, filtered.row_map, filtered.item_map);
    users = std::move(filtered.matrix);
  }

  std::filesystem::create_directories(c.out);
  save_interactions((std::filesystem::path(c.out) / "interactions.tsv").string(), users);
  save_groups((std::filesystem::path(c.out) / "groups.tsv").string(), groups);
  echo_effective_config(c, "ingest");
  std::printf("check-ins consumed by groups      %zu\n", built.grouped_checkins);
  std::printf("check-ins kept as individual      %zu\n", built.individual_checkins);
  print_dataset_stats(users, groups);
  return 0;
}

int cmd_split(const RunConfig& c) {
  auto users = require_interactions(c);
  auto groups = require_groups(c);
  auto split = split_groups(groups, users, {c.ratio_train, c.ratio_val, c.ratio_test}, c.seed);
  std::filesystem::create_directories(c.out);
  save_groups((std::filesystem::path(c.out) / "train_groups.tsv").string(), split.train_groups);
  save_groups((std::filesystem::path(c.out) / "val_groups.tsv").string(), split.val_groups);
  save_groups((std::filesystem::path(c.out) / "test_groups.tsv").string(), split.test_groups);
  echo_effective_config(c, "split");
  std::printf("split groups: train=%zu val=%zu test=%zu\n", split.train_groups.size(),
              split.val_groups.size(), split.test_groups.size());
  return 0;
}

int cmd_pretrain(const RunConfig& c) {
  auto users = require_interactions(c);
  auto cfg = c.train_config();
  auto result = pretrain_encoder(users, cfg);
  std::filesystem::create_directories(c.out);
  auto path = (std::filesystem::path(c.out) / "pretrain.ckpt").string();
  save_pretrain(path, result);
  echo_effective_config(c, "pretrain");
  std::printf("pretrained encoder written to %s (user loss %.6f)\n", path.c_str(),
              pretrain_user_loss(users, result));
  return 0;
}

void write_train_log(const std::string& path, const std::vector<EpochRecord>& log) {
  std::ofstream out(path);
  for (const auto& rec : log) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["epoch"] = rec.epoch;
    j["l_g"] = rec.l_g;
    j["l_u"] = rec.l_u;
    j["l_ug"] = rec.l_ug;
    j["l_mi"] = rec.l_mi;
    j["total"] = rec.total;
    j["val_ndcg20"] = rec.val_ndcg20;  // NaN serializes as null
    j["seconds"] = rec.seconds;
    out << j.dump() << '\n';
  }
}

int cmd_train(const RunConfig& c) {
  auto users = require_interactions(c);
  auto groups = require_groups(c);
  auto split = split_groups(groups, users, {c.ratio_train, c.ratio_val, c.ratio_test}, c.seed);
  auto cfg = c.train_config();
  auto result = train(split, cfg);

  std::filesystem::create_directories(c.out);
  auto dir = std::filesystem::path(c.out);
  save_checkpoint((dir / "model.ckpt").string(), result.model);
  save_pretrain((dir / "pretrain.ckpt").string(), result.pretrain);
  write_train_log((dir / "train_log.jsonl").string(), result.log);
  save_groups((dir / "train_groups.tsv").string(), split.train_groups);
  save_groups((dir / "val_groups.tsv").string(), split.val_groups);
  save_groups((dir / "test_groups.tsv").string(), split.test_groups);
  echo_effective_config(c, "train");
  double best = result.best_epoch >= 1
                    ? result.log[static_cast<std::size_t>(result.best_epoch - 1)].val_ndcg20
                    : std::numeric_limits<double>::quiet_NaN();
  std::printf("trained %d epochs, best epoch %d (val NDCG@20 %.4f); checkpoint at %s\n",
              cfg.epochs, result.best_epoch, best, (dir / "model.ckpt").string().c_str());
  return 0;
}

int cmd_evaluate(const RunConfig& c, bool analyze_everything) {
  if (c.checkpoint.empty()) throw CLI::ValidationError("--checkpoint is required");
  auto users = require_interactions(c);
  auto groups = require_groups(c);
  auto model = load_checkpoint(c.checkpoint);
  if (model.num_items() != c.num_items)
    throw std::runtime_error("checkpoint item count does not match --num-items");

  auto report = evaluate(model, groups, users, c.ks);
  std::vector<GroupCharacteristic> kinds;
  if (analyze_everything) {
    kinds = {GroupCharacteristic::Size, GroupCharacteristic::Coherence,
             GroupCharacteristic::Diversity};
  } else {
    for (const auto& b : c.bins) kinds.push_back(characteristic_from_string(b));
  }
  bool with_mi = analyze_everything || c.mi_variation;

  std::filesystem::create_directories(c.out);
  auto dir = std::filesystem::path(c.out);
  {
    std::ofstream out(dir / "metrics.json");
    out << report_to_json(report, kinds, with_mi).dump(2) << '\n';
  }
  write_per_group_csv((dir / "per_group.csv").string(), report);
  echo_effective_config(c, analyze_everything ? "analyze" : "evaluate");
  for (auto k : report.ks)
    std::printf("K=%zu  recall %.4f  ndcg %.4f\n", k, report.recall.at(k), report.ndcg.at(k));
  return 0;
}

int cmd_ablate(const RunConfig& c) {
  auto users = require_interactions(c);
  auto groups = require_groups(c);
  auto split = split_groups(groups, users, {c.ratio_train, c.ratio_val, c.ratio_test}, c.seed);
  auto base = c.train_config();

  std::vector<AblationVariant> variants;
  for (const auto& name : c.variants) variants.push_back(ablation_variant_from_string(name));
  auto rows = run_ablation(split, base, variants, c.seeds, c.ks);

  std::filesystem::create_directories(c.out);
  auto dir = std::filesystem::path(c.out);
  {
    std::ofstream csv(dir / "ablation.csv");
    csv << "# format_version=1\n";
    csv << "variant,seed";
    for (auto k : c.ks) csv << ",ndcg@" << k << ",recall@" << k;
    csv << '\n';
    for (const auto& row : rows) {
      for (const auto& [seed, cell] : row.per_seed) {
        csv << to_string(row.variant) << ',' << seed;
        for (auto k : c.ks) csv << ',' << cell.ndcg.at(k) << ',' << cell.recall.at(k);
        csv << '\n';
      }
      csv << to_string(row.variant) << ",mean";
      for (auto k : c.ks) csv << ',' << row.mean.ndcg.at(k) << ',' << row.mean.recall.at(k);
      csv << '\n';
    }
  }
  {
    nlohmann::json j;
    j["format_version"] = 1;
    for (const auto& row : rows) {
      nlohmann::json jr;
      for (const auto& [seed, cell] : row.per_seed) {
        nlohmann::json jc;
        for (auto k : c.ks) {
          jc["ndcg@" + std::to_string(k)] = cell.ndcg.at(k);
          jc["recall@" + std::to_string(k)] = cell.recall.at(k);
        }
        jr["seed_" + std::to_string(seed)] = jc;
      }
      nlohmann::json jm;
      for (auto k : c.ks) {
        jm["ndcg@" + std::to_string(k)] = row.mean.ndcg.at(k);
        jm["recall@" + std::to_string(k)] = row.mean.recall.at(k);
      }
      jr["mean"] = jm;
      j[to_string(row.variant)] = jr;
    }
    std::ofstream out(dir / "ablation.json");
    out << j.dump(2) << '\n';
  }
  echo_effective_config(c, "ablate");

  auto k0 = c.ks.front();
  for (const auto& row : rows)
    std::printf("%-14s mean NDCG@%zu %.4f  recall@%zu %.4f\n", to_string(row.variant).c_str(), k0,
                row.mean.ndcg.at(k0), k0, row.mean.recall.at(k0));
  const AblationRow* full_row = nullptr;
  const AblationRow* base_row = nullptr;
  for (const auto& row : rows) {
    if (row.variant == AblationVariant::Full) full_row = &row;
    if (row.variant == AblationVariant::BaseLG) base_row = &row;
  }
  if (full_row && base_row)
    std::printf("full vs base_LG NDCG@%zu delta: %+.4f\n", k0,
                full_row->mean.ndcg.at(k0) - base_row->mean.ndcg.at(k0));
  return 0;
}

int cmd_gradcheck(const RunConfig& c) {
  // Small fixed dataset; every aggregator kind and every loss term.
  auto ds = synthesize_dataset(8, 12, 3, 2, 0.2, 7);
  Hyperparams hyper{4, 0.7, 0.5, 2};
  std::vector<std::vector<std::int32_t>> negatives;
  for (std::size_t gi = 0; gi < ds.groups.size(); ++gi) {
    SplitMix64 rng(SplitMix64::stream(3, 1, gi));
    negatives.push_back(sample_negatives(ds.groups[gi], ds.users, hyper.eta,
                                         hyper.negatives_per_member, rng));
  }
  std::vector<std::int32_t> user_batch(static_cast<std::size_t>(ds.users.num_rows));
  std::iota(user_batch.begin(), user_batch.end(), 0);

  struct Term {
    const char* name;
    TermFlags flags;
  };
  TermFlags f_g, f_u, f_ug, f_mi, f_all;
  f_g.g = true;
  f_u.u = true;
  f_ug.ug = true;
  f_mi.mi = true;
  f_all.g = f_all.ug = f_all.mi = true;
  f_all.lambda = hyper.lambda;
  const Term terms[] = {{"L_G", f_g}, {"L_U", f_u}, {"L_UG", f_ug}, {"L_MI", f_mi},
                        {"combined", f_all}};

  bool all_pass = true;
  for (auto kind : {AggregatorKind::Meanpool, AggregatorKind::Maxpool, AggregatorKind::Attention}) {
    ModelState state = init_params(ds.users.num_items, kind, hyper, 11);
    std::vector<std::vector<double>> frozen;
    for (const auto& g : ds.groups) frozen.push_back(contextual_weights(state, g, ds.users));

    for (const auto& term : terms) {
      BatchInputs in;
      in.users = &ds.users;
      in.groups = std::span<const GroupRecord>(ds.groups);
      in.negatives = &negatives;
      in.user_batch = user_batch;
      in.frozen_weights = &frozen;
      auto rep = assemble_loss(in, state, term.flags);
      if (c.inject_fault) rep.grads.w2 *= 2.0;
      auto check = gradient_check(
          state, rep.grads,
          [&](const ModelState& s) { return assemble_loss(in, s, term.flags).total; }, 1e-5, 200);
      bool pass = check.passed(1e-4);
      all_pass = all_pass && pass;
      std::printf("%-10s %-9s max rel err %.3e  %s\n", to_string(kind).c_str(), term.name,
                  check.worst, pass ? "PASS" : "FAIL");
      if (!pass)
        for (const auto& e : check.entries)
          std::printf("    %-18s %.3e over %d coords\n", e.tensor.c_str(), e.max_rel_err,
                      e.coords_checked);
    }
  }
  std::printf("gradient check: %s\n", all_pass ? "PASS" : "FAIL");
  return all_pass ? 0 : 1;
}

int cmd_sweep(const RunConfig& c) {
  auto users = require_interactions(c);
  auto groups = require_groups(c);
  auto split = split_groups(groups, users, {c.ratio_train, c.ratio_val, c.ratio_test}, c.seed);

  std::filesystem::create_directories(c.out);
  std::ofstream csv(std::filesystem::path(c.out) / "sweep.csv");
  csv << "# format_version=1\n";
  csv << "lambda,val_ndcg20\n";
  double best_lambda = c.lambdas.front();
  double best_val = -1.0;
  for (double lam : c.lambdas) {
    auto cfg = c.train_config();
    cfg.lambda = lam;
    auto result = train(split, cfg);
    double val = mean_ndcg_at(result.model, split.val_groups, split.user_matrix, 20);
    csv << lam << ',' << val << '\n';
    std::printf("lambda %-8g val NDCG@20 %.4f\n", lam, val);
    if (val > best_val) {
      best_val = val;
      best_lambda = lam;
    }
  }
  echo_effective_config(c, "sweep");
  std::printf("best lambda %g (val NDCG@20 %.4f)\n", best_lambda, best_val);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"GroupIM: group recommendation with user-group mutual information maximization"};
  app.fallthrough();
  app.set_config("--config", "", "key=value config file; flags override file values");

  app.add_option("--interactions", cfg.interactions, "user-item interactions file (user<TAB>item)");
  app.add_option("--groups", cfg.groups_file, "groups file (group<TAB>u1,u2,...<TAB>item)");
  app.add_option("--checkins", cfg.checkins, "check-ins file (user<TAB>poi<TAB>unix_seconds)");
  app.add_option("--social", cfg.social, "social graph file (user<TAB>friend)");
  app.add_option("--checkpoint", cfg.checkpoint, "model checkpoint path");
  app.add_option("--pretrain-checkpoint", cfg.pretrain_ckpt, "pretrained encoder checkpoint path");
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--num-users", cfg.num_users, "user universe size");
  app.add_option("--num-items", cfg.num_items, "item universe size");
  app.add_option("--min-count", cfg.min_count, "min interactions per user/item (0 = no filter)");
  app.add_option("--window-seconds", cfg.window_seconds, "co-check-in window for group construction")
      ->check(CLI::PositiveNumber);
  app.add_option("--synth-users", cfg.synth_users, "synthetic: number of users");
  app.add_option("--synth-items", cfg.synth_items, "synthetic: number of items");
  app.add_option("--synth-groups", cfg.synth_groups, "synthetic: number of groups");
  app.add_option("--synth-clusters", cfg.synth_clusters, "synthetic: number of clusters");
  app.add_option("--synth-noise", cfg.synth_noise, "synthetic: cross-cluster interaction probability");
  app.add_option("--ratio-train", cfg.ratio_train, "train split ratio");
  app.add_option("--ratio-val", cfg.ratio_val, "validation split ratio");
  app.add_option("--ratio-test", cfg.ratio_test, "test split ratio");
  app.add_option("--embed-dim", cfg.embed_dim, "embedding dimension")->check(CLI::PositiveNumber);
  app.add_option("--lambda", cfg.lambda, "user-loss weight");
  app.add_option("--eta", cfg.eta, "negative-sampling bias");
  app.add_option("--negatives", cfg.negatives, "negatives per true user-group pair");
  app.add_option("--aggregator", cfg.aggregator, "maxpool|meanpool|attention")
      ->check(CLI::IsMember({"maxpool", "meanpool", "attention"}));
  app.add_option("--lr", cfg.lr, "learning rate");
  app.add_option("--disc-lr-multiplier", cfg.disc_lr_multiplier, "discriminator lr multiplier");
  app.add_option("--epochs", cfg.epochs, "training epochs");
  app.add_option("--pretrain-epochs", cfg.pretrain_epochs, "encoder pre-training epochs");
  app.add_option("--batch-groups", cfg.batch_groups, "group batch size");
  app.add_option("--batch-users", cfg.batch_users, "user batch size");
  app.add_option("--seed", cfg.seed, "master seed");
  app.add_option("--mode", cfg.mode, "objective variant")
      ->check(CLI::IsMember({"base_LG", "base_LG_LU", "groupim_LG_MI", "full", "uniform_w",
                             "cosine_w"}));
  app.add_flag("--no-pretrain", cfg.no_pretrain, "skip encoder pre-training");
  app.add_option("--k", cfg.ks, "metric cutoffs K")->delimiter(',');
  app.add_option("--bins", cfg.bins, "binned breakdowns: size|coherence|diversity")->delimiter(',');
  app.add_flag("--mi-variation", cfg.mi_variation, "include MI-variation summary");
  app.add_option("--variant", cfg.variants, "ablation variants")->delimiter(',');
  app.add_option("--seeds", cfg.seeds, "ablation seeds")->delimiter(',');
  app.add_option("--lambdas", cfg.lambdas, "lambda sweep values")->delimiter(',');
  app.add_flag("--inject-fault", cfg.inject_fault, "gradcheck: corrupt one gradient (detector test)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic clustered dataset");
  auto* ingest = app.add_subcommand("ingest", "build groups from check-ins and a social graph");
  auto* split_cmd = app.add_subcommand("split", "split groups into train/val/test");
  auto* pretrain = app.add_subcommand("pretrain", "pre-train the first encoder layer");
  auto* train_cmd = app.add_subcommand("train", "train a model");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on a groups file");
  auto* ablate = app.add_subcommand("ablate", "train and compare objective variants");
  auto* analyze = app.add_subcommand("analyze", "full analytics: all bins plus MI variation");
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  auto* sweep = app.add_subcommand("sweep", "lambda sweep on the validation split");
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(cfg);
    if (ingest->parsed()) return cmd_ingest(cfg);
    if (split_cmd->parsed()) return cmd_split(cfg);
    if (pretrain->parsed()) return cmd_pretrain(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (evaluate_cmd->parsed()) return cmd_evaluate(cfg, false);
    if (analyze->parsed()) return cmd_evaluate(cfg, true);
    if (ablate->parsed()) return cmd_ablate(cfg);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
