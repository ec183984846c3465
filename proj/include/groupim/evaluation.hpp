#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupim/interactions.hpp"
#include "groupim/metrics.hpp"
#include "groupim/model.hpp"
#include "groupim/numerics.hpp"

namespace groupim {

constexpr int kReportFormatVersion = 1;

/// Mean pairwise Pearson correlation of members' binary interaction rows.
/// Pairs with a zero-variance row (all zeros or all ones) contribute 0.
inline double group_coherence(const GroupRecord& group, const InteractionMatrix& users) {
  if (group.members.size() < 2)
    throw std::invalid_argument("group_coherence: needs at least 2 members");
  std::vector<std::int32_t> members = group.members;
  std::sort(members.begin(), members.end());

  const double n = static_cast<double>(users.num_items);
  auto pearson = [&](std::int32_t a, std::int32_t b) {
    const auto& xa = users.row(a);
    const auto& xb = users.row(b);
    double sa = static_cast<double>(xa.size());
    double sb = static_cast<double>(xb.size());
    double va = n * sa - sa * sa;  // n * sum(x^2) - sum(x)^2 for binary x
    double vb = n * sb - sb * sb;
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    std::size_t i = 0, j = 0, inter = 0;
    while (i < xa.size() && j < xb.size()) {
      if (xa[i] == xb[j]) { ++inter; ++i; ++j; }
      else if (xa[i] < xb[j]) ++i;
      else ++j;
    }
    double cov = n * static_cast<double>(inter) - sa * sb;
    return cov / std::sqrt(va * vb);
  };

  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      acc += pearson(members[i], members[j]);
      ++pairs;
    }
  return acc / static_cast<double>(pairs);
}

/// Number of distinct items across all members' histories.
inline std::int64_t aggregate_diversity(const GroupRecord& group, const InteractionMatrix& users) {
  std::vector<std::int32_t> all;
  for (auto u : group.members) {
    const auto& xu = users.row(u);
    all.insert(all.end(), xu.begin(), xu.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return static_cast<std::int64_t>(all.size());
}

/// Population standard deviation of discriminator scores over members.
/// Scores are reduced in sorted order so member order cannot matter.
inline double mi_variation(const ModelState& state, const GroupRecord& group,
                           const InteractionMatrix& users) {
  auto members = member_embeddings(state, group, users);
  auto e_g = aggregate(state.aggregator, members);
  std::vector<double> scores;
  scores.reserve(members.size());
  for (const auto& e_u : members) scores.push_back(discriminate(state.discriminator, e_u, e_g));
  std::sort(scores.begin(), scores.end());
  return population_std(scores);
}

struct GroupEval {
  std::int64_t group_id = 0;
  std::int32_t size = 0;
  double coherence = 0.0;
  std::int64_t diversity = 0;
  double mi_var = 0.0;
  std::map<std::size_t, double> recall;  // keyed by K
  std::map<std::size_t, double> ndcg;
};

struct MetricReport {
  std::vector<std::size_t> ks;
  std::map<std::size_t, double> recall;  // means over groups
  std::map<std::size_t, double> ndcg;
  std::vector<GroupEval> per_group;
};

inline MetricReport evaluate(const ModelState& state, std::span<const GroupRecord> groups,
                             const InteractionMatrix& users, std::vector<std::size_t> ks) {
  if (groups.empty()) throw std::invalid_argument("evaluate: no groups");
  if (ks.empty()) throw std::invalid_argument("evaluate: no K values");
  MetricReport report;
  report.ks = ks;
  for (auto k : ks) {
    report.recall[k] = 0.0;
    report.ndcg[k] = 0.0;
  }
  for (const auto& g : groups) {
    GroupEval ge;
    ge.group_id = g.group_id;
    ge.size = static_cast<std::int32_t>(g.members.size());
    ge.coherence = group_coherence(g, users);
    ge.diversity = aggregate_diversity(g, users);
    ge.mi_var = mi_variation(state, g, users);
    auto ranking = rank_items(state, g, users);
    for (auto k : ks) {
      ge.recall[k] = recall_at_k(ranking, g.items, k);
      ge.ndcg[k] = ndcg_at_k(ranking, g.items, k);
      report.recall[k] += ge.recall[k];
      report.ndcg[k] += ge.ndcg[k];
    }
    report.per_group.push_back(std::move(ge));
  }
  const double n = static_cast<double>(groups.size());
  for (auto k : ks) {
    report.recall[k] /= n;
    report.ndcg[k] /= n;
  }
  return report;
}

// --- binned breakdowns ------------------------------------------------------

enum class GroupCharacteristic { Size, Coherence, Diversity };

inline GroupCharacteristic characteristic_from_string(const std::string& s) {
  if (s == "size") return GroupCharacteristic::Size;
  if (s == "coherence") return GroupCharacteristic::Coherence;
  if (s == "diversity") return GroupCharacteristic::Diversity;
  throw std::invalid_argument("unknown characteristic: " + s);
}

struct BinRow {
  std::string label;
  std::size_t count = 0;
  std::map<std::size_t, double> mean_recall;
  std::map<std::size_t, double> mean_ndcg;
  std::vector<std::size_t> member_indices;  // offsets into per_group
};

namespace bin_detail {

// Fixed size bins: 2-3, 4-5, 6-7, 8-9, >=10.
inline std::size_t size_bin(std::int32_t size) {
  if (size <= 3) return 0;
  if (size <= 5) return 1;
  if (size <= 7) return 2;
  if (size <= 9) return 3;
  return 4;
}

// Quartile boundaries at the ceil(j*n/4)-th order statistic; ties fall to
// the lower quartile.
inline std::array<double, 3> quartile_bounds(std::vector<double> vals) {
  std::sort(vals.begin(), vals.end());
  auto n = vals.size();
  auto at = [&](std::size_t j) {
    std::size_t idx = (j * n + 3) / 4;  // ceil(j*n/4)
    if (idx == 0) idx = 1;
    return vals[idx - 1];
  };
  return {at(1), at(2), at(3)};
}

inline std::size_t quartile_of(double v, const std::array<double, 3>& bounds) {
  if (v <= bounds[0]) return 0;
  if (v <= bounds[1]) return 1;
  if (v <= bounds[2]) return 2;
  return 3;
}

}  // namespace bin_detail

/// Per-bin mean metrics. Size uses the five fixed bins; coherence and
/// diversity use empirical quartiles of the evaluated population.
inline std::vector<BinRow> bin_report(const MetricReport& report, GroupCharacteristic what) {
  std::vector<BinRow> rows;
  if (what == GroupCharacteristic::Size) {
    const char* labels[5] = {"2-3", "4-5", "6-7", "8-9", ">=10"};
    rows.resize(5);
    for (std::size_t b = 0; b < 5; ++b) rows[b].label = labels[b];
    for (std::size_t i = 0; i < report.per_group.size(); ++i)
      rows[bin_detail::size_bin(report.per_group[i].size)].member_indices.push_back(i);
  } else {
    std::vector<double> vals;
    vals.reserve(report.per_group.size());
    for (const auto& ge : report.per_group)
      vals.push_back(what == GroupCharacteristic::Coherence ? ge.coherence
                                                            : static_cast<double>(ge.diversity));
    auto bounds = bin_detail::quartile_bounds(vals);
    rows.resize(4);
    for (std::size_t b = 0; b < 4; ++b) rows[b].label = "Q" + std::to_string(b + 1);
    for (std::size_t i = 0; i < report.per_group.size(); ++i)
      rows[bin_detail::quartile_of(vals[i], bounds)].member_indices.push_back(i);
  }

  for (auto& row : rows) {
    row.count = row.member_indices.size();
    for (auto k : report.ks) {
      double r = 0.0, nd = 0.0;
      for (auto i : row.member_indices) {
        r += report.per_group[i].recall.at(k);
        nd += report.per_group[i].ndcg.at(k);
      }
      row.mean_recall[k] = row.count ? r / static_cast<double>(row.count) : 0.0;
      row.mean_ndcg[k] = row.count ? nd / static_cast<double>(row.count) : 0.0;
    }
  }
  return rows;
}

struct MiVariationRow {
  std::string bin;
  std::size_t count = 0;
  double median = 0.0;
  double iqr = 0.0;
};

/// MI-variation spread per coherence quartile.
inline std::vector<MiVariationRow> mi_variation_by_coherence(const MetricReport& report) {
  auto bins = bin_report(report, GroupCharacteristic::Coherence);
  std::vector<MiVariationRow> rows;
  for (const auto& bin : bins) {
    MiVariationRow row;
    row.bin = bin.label;
    row.count = bin.count;
    if (bin.count > 0) {
      std::vector<double> vals;
      vals.reserve(bin.count);
      for (auto i : bin.member_indices) vals.push_back(report.per_group[i].mi_var);
      row.median = median(vals);
      row.iqr = percentile(vals, 0.75) - percentile(vals, 0.25);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- serialization ---------------------------------------------------------

inline nlohmann::json report_to_json(const MetricReport& report,
                                     const std::vector<GroupCharacteristic>& bin_kinds,
                                     bool include_mi_variation) {
  nlohmann::json j;
  j["format_version"] = kReportFormatVersion;
  nlohmann::json metrics = nlohmann::json::object();
  for (auto k : report.ks) {
    metrics[std::to_string(k)] = {{"recall", report.recall.at(k)}, {"ndcg", report.ndcg.at(k)}};
  }
  j["metrics"] = metrics;
  j["groups_evaluated"] = report.per_group.size();

  nlohmann::json bins = nlohmann::json::object();
  for (auto kind : bin_kinds) {
    std::string key = kind == GroupCharacteristic::Size        ? "size"
                      : kind == GroupCharacteristic::Coherence ? "coherence"
                                                               : "diversity";
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : bin_report(report, kind)) {
      nlohmann::json je;
      je["label"] = row.label;
      je["count"] = row.count;
      for (auto k : report.ks) {
        je["ndcg@" + std::to_string(k)] = row.mean_ndcg.at(k);
        je["recall@" + std::to_string(k)] = row.mean_recall.at(k);
      }
      arr.push_back(je);
    }
    bins[key] = arr;
  }
  j["bins"] = bins;

  if (include_mi_variation) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : mi_variation_by_coherence(report)) {
      arr.push_back({{"bin", row.bin}, {"count", row.count}, {"median", row.median}, {"iqr", row.iqr}});
    }
    j["mi_variation"] = arr;
  }
  return j;
}

/// Flat per-group CSV for external plotting. First line carries the format
/// version as a comment.
inline void write_per_group_csv(const std::string& path, const MetricReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "# format_version=" << kReportFormatVersion << "\n";
  out << "group_id,size,coherence,diversity";
  for (auto k : report.ks) out << ",recall@" << k << ",ndcg@" << k;
  out << ",mi_variation\n";
  for (const auto& ge : report.per_group) {
    out << ge.group_id << ',' << ge.size << ',' << ge.coherence << ',' << ge.diversity;
    for (auto k : report.ks) out << ',' << ge.recall.at(k) << ',' << ge.ndcg.at(k);
    out << ',' << ge.mi_var << '\n';
  }
}

}  // namespace groupim
