#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace groupim {

/// Sparse binary interaction matrix. One sorted, duplicate-free item list
/// per row; rows are users (or groups when used as a group-item matrix).
struct InteractionMatrix {
  std::int32_t num_rows = 0;
  std::int32_t num_items = 0;
  std::vector<std::vector<std::int32_t>> rows;

  InteractionMatrix() = default;
  InteractionMatrix(std::int32_t n_rows, std::int32_t n_items)
      : num_rows(n_rows), num_items(n_items), rows(static_cast<std::size_t>(n_rows)) {}

  const std::vector<std::int32_t>& row(std::int32_t r) const {
    return rows[static_cast<std::size_t>(r)];
  }

  bool has(std::int32_t r, std::int32_t item) const {
    const auto& xs = rows[static_cast<std::size_t>(r)];
    return std::binary_search(xs.begin(), xs.end(), item);
  }

  std::size_t row_count(std::int32_t r) const { return rows[static_cast<std::size_t>(r)].size(); }

  std::size_t total_interactions() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.size();
    return n;
  }

  std::vector<std::int64_t> item_counts() const {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(num_items), 0);
    for (const auto& r : rows)
      for (std::int32_t i : r) ++counts[static_cast<std::size_t>(i)];
    return counts;
  }

  // Sorts and deduplicates every row in place.
  void normalize() {
    for (auto& r : rows) {
      std::sort(r.begin(), r.end());
      r.erase(std::unique(r.begin(), r.end()), r.end());
    }
  }

  void validate() const {
    if (rows.size() != static_cast<std::size_t>(num_rows))
      throw std::logic_error("InteractionMatrix: row count mismatch");
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < r.size(); ++k) {
        if (r[k] < 0 || r[k] >= num_items)
          throw std::logic_error("InteractionMatrix: item index out of range");
        if (k > 0 && r[k] <= r[k - 1])
          throw std::logic_error("InteractionMatrix: row not strictly increasing");
      }
    }
  }
};

/// One ephemeral group: a member set and its interacted items.
struct GroupRecord {
  std::int64_t group_id = 0;
  std::vector<std::int32_t> members;  // sorted, unique user indices
  std::vector<std::int32_t> items;    // sorted, unique item indices

  void normalize() {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
};

inline void validate_groups(const std::vector<GroupRecord>& groups,
                            const InteractionMatrix& users) {
  for (const auto& g : groups) {
    if (g.members.size() < 2) throw std::logic_error("group with fewer than 2 members");
    if (g.items.empty()) throw std::logic_error("group with no items");
    for (auto m : g.members)
      if (m < 0 || m >= users.num_rows) throw std::logic_error("group member out of range");
    for (auto i : g.items)
      if (i < 0 || i >= users.num_items) throw std::logic_error("group item out of range");
  }
}

struct CheckinRecord {
  std::int32_t user = 0;
  std::int32_t poi = 0;
  std::int64_t timestamp = 0;  // unix seconds
};

struct CheckinLog {
  std::int32_t num_users = 0;
  std::int32_t num_pois = 0;
  std::vector<CheckinRecord> records;
};

/// Undirected friendship graph over user indices.
struct SocialGraph {
  std::int32_t num_users = 0;
  std::vector<std::vector<std::int32_t>> adj;

  explicit SocialGraph(std::int32_t n = 0)
      : num_users(n), adj(static_cast<std::size_t>(n)) {}

  void add_edge(std::int32_t a, std::int32_t b) {
    if (a == b) return;  // no self-loops
    if (a < 0 || b < 0 || a >= num_users || b >= num_users)
      throw std::out_of_range("SocialGraph: user index out of range");
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }

  void normalize() {
    for (auto& n : adj) {
      std::sort(n.begin(), n.end());
      n.erase(std::unique(n.begin(), n.end()), n.end());
    }
  }

  bool friends(std::int32_t a, std::int32_t b) const {
    const auto& n = adj[static_cast<std::size_t>(a)];
    return std::binary_search(n.begin(), n.end(), b);
  }
};

/// Train/val/test partition of groups plus the shared user-item matrix.
struct DatasetSplit {
  InteractionMatrix user_matrix;
  std::vector<GroupRecord> train_groups;
  std::vector<GroupRecord> val_groups;
  std::vector<GroupRecord> test_groups;
};

}  // namespace groupim
