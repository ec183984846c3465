#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "groupim/interactions.hpp"

namespace groupim {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline std::int64_t parse_int(std::string_view field, const std::string& path, std::size_t line) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(path + ":" + std::to_string(line) + ": expected integer, got '" +
                     std::string(field) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  return out;
}

}  // namespace detail

/// Reads a "user_id<TAB>item_id" file into a binary matrix. Duplicate pairs
/// collapse; rows come out sorted. Ids outside [0, num_users/items) reject
/// with the offending line number.
inline InteractionMatrix load_interactions(const std::string& path, std::int32_t num_users,
                                           std::int32_t num_items) {
  auto in = detail::open_input(path);
  InteractionMatrix m(num_users, num_items);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::trim_cr(raw);
    if (line.empty()) continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 2)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'user<TAB>item'");
    std::int64_t u = detail::parse_int(fields[0], path, line_no);
    std::int64_t i = detail::parse_int(fields[1], path, line_no);
    if (u < 0 || u >= num_users)
      throw ParseError(path + ":" + std::to_string(line_no) + ": user id " + std::to_string(u) +
                       " out of range [0," + std::to_string(num_users) + ")");
    if (i < 0 || i >= num_items)
      throw ParseError(path + ":" + std::to_string(line_no) + ": item id " + std::to_string(i) +
                       " out of range [0," + std::to_string(num_items) + ")");
    m.rows[static_cast<std::size_t>(u)].push_back(static_cast<std::int32_t>(i));
  }
  m.normalize();
  return m;
}

inline void save_interactions(const std::string& path, const InteractionMatrix& m) {
  auto out = detail::open_output(path);
  for (std::int32_t u = 0; u < m.num_rows; ++u)
    for (std::int32_t i : m.row(u)) out << u << '\t' << i << '\n';
}

/// Groups file: one "group_id<TAB>u1,u2,...<TAB>item_id" line per
/// (group, item) pair. Lines sharing a group_id must agree on members.
inline std::vector<GroupRecord> load_groups(const std::string& path, std::int32_t num_users,
                                            std::int32_t num_items) {
  auto in = detail::open_input(path);
  std::map<std::int64_t, GroupRecord> by_id;
  std::vector<std::int64_t> order;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::trim_cr(raw);
    if (line.empty()) continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 3)
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 'group<TAB>members<TAB>item'");
    std::int64_t gid = detail::parse_int(fields[0], path, line_no);
    std::vector<std::int32_t> members;
    for (auto part : detail::split(fields[1], ',')) {
      std::int64_t u = detail::parse_int(part, path, line_no);
      if (u < 0 || u >= num_users)
        throw ParseError(path + ":" + std::to_string(line_no) + ": member id out of range");
      members.push_back(static_cast<std::int32_t>(u));
    }
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    std::int64_t item = detail::parse_int(fields[2], path, line_no);
    if (item < 0 || item >= num_items)
      throw ParseError(path + ":" + std::to_string(line_no) + ": item id out of range");

    auto it = by_id.find(gid);
    if (it == by_id.end()) {
      GroupRecord g;
      g.group_id = gid;
      g.members = members;
      g.items.push_back(static_cast<std::int32_t>(item));
      by_id.emplace(gid, std::move(g));
      order.push_back(gid);
    } else {
      if (it->second.members != members)
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": inconsistent member set for group " + std::to_string(gid));
      it->second.items.push_back(static_cast<std::int32_t>(item));
    }
  }
  std::vector<GroupRecord> out;
  out.reserve(order.size());
  for (auto gid : order) {
    auto g = by_id.at(gid);
    g.normalize();
    out.push_back(std::move(g));
  }
  return out;
}

inline void save_groups(const std::string& path, const std::vector<GroupRecord>& groups) {
  auto out = detail::open_output(path);
  for (const auto& g : groups) {
    std::ostringstream members;
    for (std::size_t k = 0; k < g.members.size(); ++k) {
      if (k) members << ',';
      members << g.members[k];
    }
    for (std::int32_t item : g.items) out << g.group_id << '\t' << members.str() << '\t' << item << '\n';
  }
}

/// Check-ins file: "user_id<TAB>poi_id<TAB>unix_seconds".
inline CheckinLog load_checkins(const std::string& path, std::int32_t num_users,
                                std::int32_t num_pois) {
  auto in = detail::open_input(path);
  CheckinLog log;
  log.num_users = num_users;
  log.num_pois = num_pois;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::trim_cr(raw);
    if (line.empty()) continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 3)
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 'user<TAB>poi<TAB>seconds'");
    std::int64_t u = detail::parse_int(fields[0], path, line_no);
    std::int64_t p = detail::parse_int(fields[1], path, line_no);
    std::int64_t t = detail::parse_int(fields[2], path, line_no);
    if (u < 0 || u >= num_users)
      throw ParseError(path + ":" + std::to_string(line_no) + ": user id out of range");
    if (p < 0 || p >= num_pois)
      throw ParseError(path + ":" + std::to_string(line_no) + ": poi id out of range");
    if (t < 0)
      throw ParseError(path + ":" + std::to_string(line_no) + ": negative timestamp");
    log.records.push_back({static_cast<std::int32_t>(u), static_cast<std::int32_t>(p), t});
  }
  return log;
}

/// Social file: "user_id<TAB>friend_id", undirected.
inline SocialGraph load_social(const std::string& path, std::int32_t num_users) {
  auto in = detail::open_input(path);
  SocialGraph graph(num_users);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = detail::trim_cr(raw);
    if (line.empty()) continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 2)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'user<TAB>friend'");
    std::int64_t a = detail::parse_int(fields[0], path, line_no);
    std::int64_t b = detail::parse_int(fields[1], path, line_no);
    if (a < 0 || a >= num_users || b < 0 || b >= num_users)
      throw ParseError(path + ":" + std::to_string(line_no) + ": user id out of range");
    if (a != b) graph.add_edge(static_cast<std::int32_t>(a), static_cast<std::int32_t>(b));
  }
  graph.normalize();
  return graph;
}

}  // namespace groupim
