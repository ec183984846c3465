#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "groupim/interactions.hpp"
#include "groupim/rng.hpp"

namespace groupim {

struct SyntheticDataset {
  InteractionMatrix users;
  std::vector<GroupRecord> groups;
  std::vector<std::int32_t> user_cluster;
  std::vector<std::int32_t> item_cluster;
};

/// Deterministic clustered dataset for desk-scale experiments.
///
/// Users and items are partitioned into contiguous latent clusters. Inside
/// a cluster most users have a preference window (a contiguous arc of the
/// cluster's items anchored at the user's rank), interacted with high
/// probability; remaining own-cluster items are picked up occasionally and
/// any other item with probability `noise`. Every fifth user of a cluster
/// is a tourist with a broad, undifferentiated history across the whole
/// cluster.
///
/// Groups of 2-6 seed at a random focused (non-tourist) user. Further
/// members are core members from the seed's tight rank neighborhood
/// (probability 0.55), passive members from a wider arc (0.2), cluster
/// tourists (0.2), or any user (0.05). The 1-3 group items come from the
/// core members' own-cluster histories, favoring items several core
/// members share. Core members therefore carry the signal for the group's
/// items while tourists and out-of-cluster members do not, giving member
/// informativeness a learnable gradient.
inline SyntheticDataset synthesize_dataset(std::int32_t n_users, std::int32_t n_items,
                                           std::int32_t n_groups, std::int32_t n_clusters,
                                           double noise, std::uint64_t seed) {
  if (n_users < 2 || n_items < 1 || n_clusters < 1)
    throw std::invalid_argument("synthesize_dataset: bad sizes");
  if (n_clusters > n_users || n_clusters > n_items)
    throw std::invalid_argument("synthesize_dataset: n_clusters exceeds users or items");
  if (noise < 0.0 || noise > 1.0) throw std::invalid_argument("noise must be a probability");

  constexpr double kWindowProb = 0.7;      // own window items
  constexpr double kInClusterProb = 0.15;  // rest of own cluster
  constexpr double kTouristProb = 0.45;    // tourists, over the whole cluster
  constexpr double kCoreSlot = 0.55;       // member from the seed's tight arc
  constexpr double kPassiveSlot = 0.2;     // member from a wider arc
  constexpr double kTouristSlot = 0.2;     // member from the cluster's tourists

  SyntheticDataset ds;
  ds.users = InteractionMatrix(n_users, n_items);
  ds.user_cluster.resize(static_cast<std::size_t>(n_users));
  ds.item_cluster.resize(static_cast<std::size_t>(n_items));

  auto cluster_of = [n_clusters](std::int32_t idx, std::int32_t total) {
    return static_cast<std::int32_t>((static_cast<std::int64_t>(idx) * n_clusters) / total);
  };
  for (std::int32_t u = 0; u < n_users; ++u)
    ds.user_cluster[static_cast<std::size_t>(u)] = cluster_of(u, n_users);
  for (std::int32_t i = 0; i < n_items; ++i)
    ds.item_cluster[static_cast<std::size_t>(i)] = cluster_of(i, n_items);

  std::vector<std::vector<std::int32_t>> cluster_items(static_cast<std::size_t>(n_clusters));
  std::vector<std::vector<std::int32_t>> cluster_users(static_cast<std::size_t>(n_clusters));
  for (std::int32_t i = 0; i < n_items; ++i)
    cluster_items[static_cast<std::size_t>(ds.item_cluster[static_cast<std::size_t>(i)])].push_back(i);
  for (std::int32_t u = 0; u < n_users; ++u)
    cluster_users[static_cast<std::size_t>(ds.user_cluster[static_cast<std::size_t>(u)])].push_back(u);

  std::vector<std::int32_t> rank_in_cluster(static_cast<std::size_t>(n_users), 0);
  for (const auto& pool : cluster_users)
    for (std::size_t r = 0; r < pool.size(); ++r)
      rank_in_cluster[static_cast<std::size_t>(pool[r])] = static_cast<std::int32_t>(r);

  auto is_tourist = [&](std::int32_t u) { return rank_in_cluster[static_cast<std::size_t>(u)] % 5 == 0; };

  std::vector<std::vector<std::int32_t>> cluster_tourists(static_cast<std::size_t>(n_clusters));
  std::vector<std::vector<std::int32_t>> cluster_focused(static_cast<std::size_t>(n_clusters));
  for (std::int32_t c = 0; c < n_clusters; ++c)
    for (auto u : cluster_users[static_cast<std::size_t>(c)])
      (is_tourist(u) ? cluster_tourists : cluster_focused)[static_cast<std::size_t>(c)].push_back(u);

  SplitMix64 rng(SplitMix64::stream(seed, 0x53594e54ULL, 0));

  // Window arc of roughly a third of the cluster's items, wrap-around,
  // anchored at the user's relative rank.
  auto in_window = [&](std::int32_t u, std::size_t item_pos, std::size_t n_cluster_items) {
    auto uc = ds.user_cluster[static_cast<std::size_t>(u)];
    std::size_t n_cluster_users = cluster_users[static_cast<std::size_t>(uc)].size();
    std::size_t width = std::max<std::size_t>(1, n_cluster_items / 3);
    std::size_t anchor =
        (static_cast<std::size_t>(rank_in_cluster[static_cast<std::size_t>(u)]) * n_cluster_items) /
        std::max<std::size_t>(1, n_cluster_users);
    std::size_t dist = (item_pos + n_cluster_items - anchor) % n_cluster_items;
    return dist < width;
  };

  for (std::int32_t u = 0; u < n_users; ++u) {
    auto uc = ds.user_cluster[static_cast<std::size_t>(u)];
    const auto& pool = cluster_items[static_cast<std::size_t>(uc)];
    auto& row = ds.users.rows[static_cast<std::size_t>(u)];
    for (std::int32_t i = 0; i < n_items; ++i) {
      double p;
      if (ds.item_cluster[static_cast<std::size_t>(i)] == uc) {
        if (is_tourist(u)) {
          p = kTouristProb;
        } else {
          auto pos = static_cast<std::size_t>(
              std::lower_bound(pool.begin(), pool.end(), i) - pool.begin());
          p = in_window(u, pos, pool.size()) ? kWindowProb : kInClusterProb;
        }
      } else {
        p = noise;
      }
      if (rng.uniform01() < p) row.push_back(i);
    }
    if (row.empty()) row.push_back(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
  }
  ds.users.normalize();

  for (std::int32_t gi = 0; gi < n_groups; ++gi) {
    GroupRecord g;
    g.group_id = gi;
    auto size = 2 + static_cast<std::int32_t>(rng.below(5));  // 2..6

    auto gc = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n_clusters)));
    const auto& peers = cluster_users[static_cast<std::size_t>(gc)];
    const auto& focused = cluster_focused[static_cast<std::size_t>(gc)];
    const auto& tourists = cluster_tourists[static_cast<std::size_t>(gc)];
    auto seed_user = focused.empty()
                         ? peers[static_cast<std::size_t>(rng.below(peers.size()))]
                         : focused[static_cast<std::size_t>(rng.below(focused.size()))];
    auto seed_rank = rank_in_cluster[static_cast<std::size_t>(seed_user)];
    const std::int32_t radius =
        std::max<std::int32_t>(2, static_cast<std::int32_t>(peers.size()) / 12);

    g.members.push_back(seed_user);
    std::vector<std::int32_t> core{seed_user};
    auto arc_member = [&](std::int32_t lo, std::int32_t hi) {
      auto span = static_cast<std::uint64_t>(hi - lo + 1);
      auto offset = lo + static_cast<std::int32_t>(rng.below(span));
      if (rng.uniform01() < 0.5) offset = -offset;
      auto n_peers = static_cast<std::int32_t>(peers.size());
      auto r = ((seed_rank + offset) % n_peers + n_peers) % n_peers;
      return peers[static_cast<std::size_t>(r)];
    };
    while (static_cast<std::int32_t>(g.members.size()) < size) {
      std::int32_t u;
      bool is_core = false;
      double role = rng.uniform01();
      if (role < kCoreSlot) {
        u = arc_member(0, radius);
        is_core = !is_tourist(u);
      } else if (role < kCoreSlot + kPassiveSlot) {
        u = arc_member(radius + 1, 3 * radius);
      } else if (role < kCoreSlot + kPassiveSlot + kTouristSlot && !tourists.empty()) {
        u = tourists[static_cast<std::size_t>(rng.below(tourists.size()))];
      } else {
        u = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n_users)));
      }
      if (std::find(g.members.begin(), g.members.end(), u) == g.members.end()) {
        g.members.push_back(u);
        if (is_core) core.push_back(u);
      }
      if (g.members.size() >= static_cast<std::size_t>(n_users)) break;
    }

    // Candidate group items: core members' own items within the seed
    // cluster, weighted by the squared number of core members sharing each.
    std::vector<std::int32_t> candidates;
    std::vector<double> cumulative;
    {
      std::vector<std::int32_t> shared(static_cast<std::size_t>(n_items), 0);
      for (auto u : core)
        for (std::int32_t i : ds.users.row(u))
          if (ds.item_cluster[static_cast<std::size_t>(i)] == gc)
            ++shared[static_cast<std::size_t>(i)];
      double total = 0.0;
      for (std::int32_t i = 0; i < n_items; ++i) {
        if (shared[static_cast<std::size_t>(i)] == 0) continue;
        auto s = static_cast<double>(shared[static_cast<std::size_t>(i)]);
        total += s * s;
        candidates.push_back(i);
        cumulative.push_back(total);
      }
    }
    const auto& pool = cluster_items[static_cast<std::size_t>(gc)];
    auto n_pick = 1 + static_cast<std::int32_t>(rng.below(3));  // 1..3
    for (std::int32_t k = 0; k < n_pick; ++k) {
      if (candidates.empty()) {
        g.items.push_back(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
      } else {
        double r = rng.uniform01() * cumulative.back();
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
        std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
        if (idx >= candidates.size()) idx = candidates.size() - 1;
        g.items.push_back(candidates[idx]);
      }
    }

    g.normalize();
    ds.groups.push_back(std::move(g));
  }
  return ds;
}

}  // namespace groupim
