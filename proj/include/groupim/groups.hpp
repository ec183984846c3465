#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "groupim/interactions.hpp"
#include "groupim/rng.hpp"

namespace groupim {

struct ConstructResult {
  InteractionMatrix user_matrix;     // individual interactions only
  std::vector<GroupRecord> groups;   // one record per distinct member set
  std::size_t grouped_checkins = 0;
  std::size_t individual_checkins = 0;
};

/// Builds group interactions from a check-in log and a friendship graph.
///
/// Per POI, check-ins are scanned in time order. The earliest unconsumed
/// check-in anchors a candidate group: the anchor user plus any friends of
/// the anchor whose check-ins at the same POI fall within `window_seconds`
/// of the anchor's timestamp. Candidates with >= 2 distinct users consume
/// their check-ins and emit a group interaction at that POI; everything
/// left over becomes an individual interaction. Emitted groups with the
/// same member set merge, accumulating POIs in one item list.
inline ConstructResult construct_groups(const CheckinLog& log, const SocialGraph& graph,
                                        std::int64_t window_seconds = 900) {
  if (window_seconds <= 0) throw std::invalid_argument("window_seconds must be positive");
  if (graph.num_users < log.num_users)
    throw std::invalid_argument("social graph smaller than user universe");

  ConstructResult out;
  out.user_matrix = InteractionMatrix(log.num_users, log.num_pois);

  // Bucket check-in indices by POI, then order each bucket by (time, user).
  std::vector<std::vector<std::size_t>> by_poi(static_cast<std::size_t>(log.num_pois));
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    const auto& r = log.records[k];
    if (r.user < 0 || r.user >= log.num_users) throw std::invalid_argument("check-in user out of range");
    if (r.poi < 0 || r.poi >= log.num_pois) throw std::invalid_argument("check-in poi out of range");
    if (r.timestamp < 0) throw std::invalid_argument("negative check-in timestamp");
    by_poi[static_cast<std::size_t>(r.poi)].push_back(k);
  }

  std::map<std::vector<std::int32_t>, std::size_t> group_index;  // member set -> slot

  for (std::int32_t poi = 0; poi < log.num_pois; ++poi) {
    auto& idx = by_poi[static_cast<std::size_t>(poi)];
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto& ra = log.records[a];
      const auto& rb = log.records[b];
      return std::tie(ra.timestamp, ra.user) < std::tie(rb.timestamp, rb.user);
    });

    std::vector<bool> consumed(idx.size(), false);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      if (consumed[a]) continue;
      const auto& anchor = log.records[idx[a]];
      std::vector<std::size_t> window;  // positions in idx joining the candidate
      std::vector<std::int32_t> members{anchor.user};
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        const auto& cand = log.records[idx[b]];
        if (cand.timestamp - anchor.timestamp > window_seconds) break;
        if (consumed[b]) continue;
        if (cand.user == anchor.user || graph.friends(anchor.user, cand.user)) {
          window.push_back(b);
          members.push_back(cand.user);
        }
      }
      std::sort(members.begin(), members.end());
      members.erase(std::unique(members.begin(), members.end()), members.end());
      if (members.size() < 2) continue;  // anchor stays individual

      consumed[a] = true;
      for (std::size_t b : window) consumed[b] = true;
      out.grouped_checkins += 1 + window.size();

      auto it = group_index.find(members);
      if (it == group_index.end()) {
        GroupRecord g;
        g.group_id = static_cast<std::int64_t>(out.groups.size());
        g.members = members;
        g.items.push_back(poi);
        group_index.emplace(members, out.groups.size());
        out.groups.push_back(std::move(g));
      } else {
        out.groups[it->second].items.push_back(poi);
      }
    }

    for (std::size_t a = 0; a < idx.size(); ++a) {
      if (consumed[a]) continue;
      const auto& r = log.records[idx[a]];
      out.user_matrix.rows[static_cast<std::size_t>(r.user)].push_back(r.poi);
      ++out.individual_checkins;
    }
  }

  out.user_matrix.normalize();
  for (auto& g : out.groups) g.normalize();
  return out;
}

struct FilterResult {
  InteractionMatrix matrix;
  // old index -> new index, -1 when dropped
  std::vector<std::int32_t> row_map;
  std::vector<std::int32_t> item_map;
};

/// Iteratively drops rows and items with fewer than `min_count`
/// interactions until both directions are stable, then compacts indices.
inline FilterResult filter_min_interactions(const InteractionMatrix& matrix,
                                            std::size_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");

  std::vector<bool> row_alive(static_cast<std::size_t>(matrix.num_rows), true);
  std::vector<bool> item_alive(static_cast<std::size_t>(matrix.num_items), true);

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::size_t> row_counts(static_cast<std::size_t>(matrix.num_rows), 0);
    std::vector<std::size_t> item_counts(static_cast<std::size_t>(matrix.num_items), 0);
    for (std::int32_t r = 0; r < matrix.num_rows; ++r) {
      if (!row_alive[static_cast<std::size_t>(r)]) continue;
      for (std::int32_t i : matrix.row(r)) {
        if (!item_alive[static_cast<std::size_t>(i)]) continue;
        ++row_counts[static_cast<std::size_t>(r)];
        ++item_counts[static_cast<std::size_t>(i)];
      }
    }
    for (std::int32_t r = 0; r < matrix.num_rows; ++r) {
      auto rr = static_cast<std::size_t>(r);
      if (row_alive[rr] && row_counts[rr] < min_count) {
        row_alive[rr] = false;
        changed = true;
      }
    }
    for (std::int32_t i = 0; i < matrix.num_items; ++i) {
      auto ii = static_cast<std::size_t>(i);
      if (item_alive[ii] && item_counts[ii] < min_count) {
        item_alive[ii] = false;
        changed = true;
      }
    }
  }

  FilterResult out;
  out.row_map.assign(static_cast<std::size_t>(matrix.num_rows), -1);
  out.item_map.assign(static_cast<std::size_t>(matrix.num_items), -1);
  std::int32_t next_row = 0;
  for (std::int32_t r = 0; r < matrix.num_rows; ++r)
    if (row_alive[static_cast<std::size_t>(r)]) out.row_map[static_cast<std::size_t>(r)] = next_row++;
  std::int32_t next_item = 0;
  for (std::int32_t i = 0; i < matrix.num_items; ++i)
    if (item_alive[static_cast<std::size_t>(i)]) out.item_map[static_cast<std::size_t>(i)] = next_item++;

  if (next_row == 0 || next_item == 0)
    throw std::runtime_error("empty after filtering: no row or item meets min_count=" +
                             std::to_string(min_count));

  out.matrix = InteractionMatrix(next_row, next_item);
  for (std::int32_t r = 0; r < matrix.num_rows; ++r) {
    std::int32_t nr = out.row_map[static_cast<std::size_t>(r)];
    if (nr < 0) continue;
    for (std::int32_t i : matrix.row(r)) {
      std::int32_t ni = out.item_map[static_cast<std::size_t>(i)];
      if (ni >= 0) out.matrix.rows[static_cast<std::size_t>(nr)].push_back(ni);
    }
  }
  out.matrix.normalize();
  return out;
}

/// Remaps groups after filtering: dead members/items drop out, groups that
/// fall under 2 members or 0 items are removed.
inline std::vector<GroupRecord> remap_groups(const std::vector<GroupRecord>& groups,
                                             const std::vector<std::int32_t>& row_map,
                                             const std::vector<std::int32_t>& item_map) {
  std::vector<GroupRecord> out;
  for (const auto& g : groups) {
    GroupRecord ng;
    ng.group_id = g.group_id;
    for (auto m : g.members) {
      std::int32_t nm = row_map[static_cast<std::size_t>(m)];
      if (nm >= 0) ng.members.push_back(nm);
    }
    for (auto i : g.items) {
      std::int32_t ni = item_map[static_cast<std::size_t>(i)];
      if (ni >= 0) ng.items.push_back(ni);
    }
    ng.normalize();
    if (ng.members.size() >= 2 && !ng.items.empty()) out.push_back(std::move(ng));
  }
  return out;
}

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

/// Random group split with two guarantees: groups sharing a member set land
/// in the same part (they are coalesced into one bucket before shuffling),
/// and part sizes follow largest-remainder rounding of the bucket count.
inline DatasetSplit split_groups(const std::vector<GroupRecord>& groups,
                                 const InteractionMatrix& user_matrix,
                                 SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0)
    throw std::invalid_argument("split ratios must be positive");
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must sum to 1");

  // Coalesce by member set, preserving first-seen order.
  std::map<std::vector<std::int32_t>, std::size_t> bucket_of;
  std::vector<std::vector<std::size_t>> buckets;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    auto it = bucket_of.find(groups[k].members);
    if (it == bucket_of.end()) {
      bucket_of.emplace(groups[k].members, buckets.size());
      buckets.push_back({k});
    } else {
      buckets[it->second].push_back(k);
    }
  }
  if (buckets.size() < 3)
    throw std::runtime_error("need at least 3 distinct member sets to split, got " +
                             std::to_string(buckets.size()));

  std::vector<std::size_t> order(buckets.size());
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(SplitMix64::stream(seed, 0x53504c49ULL, 0));
  rng.shuffle(order);

  // Largest-remainder apportionment of bucket counts.
  const double n = static_cast<double>(buckets.size());
  const double targets[3] = {ratios.train * n, ratios.val * n, ratios.test * n};
  std::size_t counts[3];
  double fracs[3];
  std::size_t assigned = 0;
  for (int j = 0; j < 3; ++j) {
    counts[j] = static_cast<std::size_t>(targets[j]);
    fracs[j] = targets[j] - static_cast<double>(counts[j]);
    assigned += counts[j];
  }
  std::size_t leftover = buckets.size() - assigned;
  std::array<int, 3> by_frac{0, 1, 2};
  std::sort(by_frac.begin(), by_frac.end(), [&](int a, int b) {
    if (fracs[a] != fracs[b]) return fracs[a] > fracs[b];
    return a < b;  // ties: train before val before test
  });
  for (std::size_t k = 0; k < leftover; ++k) ++counts[by_frac[k % 3]];

  DatasetSplit split;
  split.user_matrix = user_matrix;
  std::size_t pos = 0;
  auto take = [&](std::size_t count, std::vector<GroupRecord>& dst) {
    for (std::size_t k = 0; k < count; ++k, ++pos)
      for (std::size_t gi : buckets[order[pos]]) dst.push_back(groups[gi]);
  };
  take(counts[0], split.train_groups);
  take(counts[1], split.val_groups);
  take(counts[2], split.test_groups);
  return split;
}

}  // namespace groupim
