// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tamplus/error.hpp"

namespace tamplus {

/// Neighborhood of an online vertex: a strictly increasing list of offline
/// indices. Two online vertices with equal neighborhoods are interchangeable.
class VertexType {
public:
  VertexType() = default;

  /// Sorts the indices. Duplicates and negative indices are rejected.
  explicit VertexType(std::vector<int> neighbors) : neighbors_(std::move(neighbors)) {
    std::sort(neighbors_.begin(), neighbors_.end());
    for (std::size_t i = 0; i < neighbors_.size(); ++i) {
      require(neighbors_[i] >= 0, "vertex type: negative offline index");
      require(i == 0 || neighbors_[i - 1] < neighbors_[i], "vertex type: duplicate offline index");
    }
  }

  VertexType(std::initializer_list<int> neighbors) : VertexType(std::vector<int>(neighbors)) {}

  const std::vector<int>& neighbors() const noexcept { return neighbors_; }
  std::size_t degree() const noexcept { return neighbors_.size(); }
  bool empty() const noexcept { return neighbors_.empty(); }

  bool contains(int offline) const noexcept {
    return std::binary_search(neighbors_.begin(), neighbors_.end(), offline);
  }

  /// True when every index is below `n`.
  bool fits(int n) const noexcept { return neighbors_.empty() || neighbors_.back() < n; }

  friend auto operator<=>(const VertexType&, const VertexType&) = default;
  friend bool operator==(const VertexType&, const VertexType&) = default;

private:
  std::vector<int> neighbors_;
};

/// Count of online vertices per type. Entries are kept sorted by type with
/// strictly positive counts summing to `n`, the number of online vertices
/// (which equals the number of offline vertices).
class TypeProfile {
public:
  struct Entry {
    VertexType type;
    int count = 0;
  };

  TypeProfile() = default;

  /// Merges repeated types and drops zero counts. Throws ValidationError when
  /// the counts do not sum to `n` or a type references an index >= n.
  TypeProfile(int n, std::vector<Entry> entries) : n_(n), entries_(std::move(entries)) {
    require(n >= 1, "profile: n must be at least 1");
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.type < b.type; });
    std::vector<Entry> merged;
    merged.reserve(entries_.size());
    std::int64_t total = 0;
    for (auto& e : entries_) {
      require(e.count >= 0, "profile: negative count");
      require(e.type.fits(n), "profile: offline index out of range");
      total += e.count;
      if (e.count == 0) continue;
      if (!merged.empty() && merged.back().type == e.type) {
        merged.back().count += e.count;
      } else {
        merged.push_back(std::move(e));
      }
    }
    require(total == n, "profile: counts sum to " + std::to_string(total) + ", expected " +
                            std::to_string(n));
    entries_ = std::move(merged);
  }

  int n() const noexcept { return n_; }
  /// Number of distinct types with positive count (r* or r-hat).
  int support_size() const noexcept { return static_cast<int>(entries_.size()); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }

  /// Index of `type` among the entries, or -1.
  int index_of(const VertexType& type) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), type,
                               [](const Entry& e, const VertexType& t) { return e.type < t; });
    if (it == entries_.end() || it->type != type) return -1;
    return static_cast<int>(it - entries_.begin());
  }

  int count(const VertexType& type) const {
    const int i = index_of(type);
    return i < 0 ? 0 : entries_[i].count;
  }

  /// Type index of each online vertex; copies of a type are contiguous.
  std::vector<int> expand() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n_));
    for (std::size_t i = 0; i < entries_.size(); ++i) out.insert(out.end(), entries_[i].count, static_cast<int>(i));
    return out;
  }

  friend bool operator==(const TypeProfile& a, const TypeProfile& b) {
    if (a.n_ != b.n_ || a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
      if (a.entries_[i].type != b.entries_[i].type || a.entries_[i].count != b.entries_[i].count) return false;
    }
    return true;
  }

private:
  int n_ = 0;
  std::vector<Entry> entries_;
};

/// Offline partners assigned to each type by a maximum matching of the
/// profile's graph. `partners[i]` belongs to the i-th entry of the profile.
struct MatchingPlan {
  std::vector<std::vector<int>> partners;
  int size = 0;
};

namespace detail {

/// Hopcroft-Karp on the graph where each type is expanded into `count`
/// identical online vertices. Returns the offline partner of every online
/// vertex (or -1), in expansion order.
inline std::vector<int> hopcroft_karp(const TypeProfile& profile) {
  constexpr int kInf = std::numeric_limits<int>::max();
  const int n = profile.n();
  const std::vector<int> type_of = profile.expand();
  const auto& entries = profile.entries();
  auto adj = [&](int left) -> const std::vector<int>& { return entries[type_of[left]].type.neighbors(); };

  std::vector<int> match_left(n, -1);
  std::vector<int> match_right(n, -1);
  std::vector<int> dist(n);
  std::vector<std::size_t> next_edge(n);
  std::vector<int> queue;
  std::vector<int> stack;
  queue.reserve(n);

  auto bfs = [&] {
    queue.clear();
    for (int u = 0; u < n; ++u) {
      if (match_left[u] == -1) {
        dist[u] = 0;
        queue.push_back(u);
      } else {
        dist[u] = kInf;
      }
    }
    int free_dist = kInf;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      if (dist[u] >= free_dist) continue;
      for (int y : adj(u)) {
        const int w = match_right[y];
        if (w == -1) {
          if (free_dist == kInf) free_dist = dist[u] + 1;
        } else if (dist[w] == kInf) {
          dist[w] = dist[u] + 1;
          queue.push_back(w);
        }
      }
    }
    return free_dist;
  };

  // Iterative layered DFS; on success flips the path held in `stack`.
  auto augment = [&](int root, int free_dist) {
    stack.assign(1, root);
    while (!stack.empty()) {
      const int x = stack.back();
      const auto& nb = adj(x);
      if (next_edge[x] == nb.size()) {
        dist[x] = kInf;
        stack.pop_back();
        if (!stack.empty()) ++next_edge[stack.back()];
        continue;
      }
      const int y = nb[next_edge[x]];
      const int w = match_right[y];
      if (w == -1) {
        if (dist[x] + 1 == free_dist) {
          for (int z : stack) {
            const int zy = adj(z)[next_edge[z]];
            match_left[z] = zy;
            match_right[zy] = z;
          }
          return true;
        }
        ++next_edge[x];
      } else if (dist[w] == dist[x] + 1) {
        stack.push_back(w);
      } else {
        ++next_edge[x];
      }
    }
    return false;
  };

  for (;;) {
    const int free_dist = bfs();
    if (free_dist == kInf) break;
    std::fill(next_edge.begin(), next_edge.end(), 0);
    for (int u = 0; u < n; ++u) {
      if (match_left[u] == -1 && dist[u] == 0) augment(u, free_dist);
    }
  }
  return match_left;
}

}  // namespace detail

/// Maximum-cardinality matching of the graph described by `profile`.
/// Types are expanded in sorted order and neighbors scanned ascending, so the
/// plan is identical across runs and platforms.
inline MatchingPlan maximum_matching(const TypeProfile& profile) {
  require(profile.n() >= 1, "maximum_matching: empty profile");
  const std::vector<int> match_left = detail::hopcroft_karp(profile);
  const std::vector<int> type_of = profile.expand();
  MatchingPlan plan;
  plan.partners.resize(profile.entries().size());
  for (std::size_t v = 0; v < match_left.size(); ++v) {
    if (match_left[v] == -1) continue;
    plan.partners[type_of[v]].push_back(match_left[v]);
    ++plan.size;
  }
  return plan;
}

/// Exhaustive maximum matching size, used as a test oracle. Memoized over
/// (online vertex, set of used offline vertices); limited to n <= 10.
inline int brute_force_matching(const TypeProfile& profile) {
  constexpr int kMaxN = 10;
  const int n = profile.n();
  if (n > kMaxN) throw OracleTooLarge("brute_force_matching: n = " + std::to_string(n) + " exceeds 10");
  require(n >= 1, "brute_force_matching: empty profile");
  const std::vector<int> type_of = profile.expand();
  const std::size_t masks = std::size_t{1} << n;
  // best[v][mask]: max matches among online vertices v.. given used offline set `mask`.
  std::vector<std::vector<int>> best(static_cast<std::size_t>(n) + 1, std::vector<int>(masks, 0));
  for (int v = n - 1; v >= 0; --v) {
    const auto& nb = profile[type_of[v]].type.neighbors();
    for (std::size_t mask = 0; mask < masks; ++mask) {
      int value = best[v + 1][mask];
      for (int u : nb) {
        if (mask & (std::size_t{1} << u)) continue;
        value = std::max(value, 1 + best[v + 1][mask | (std::size_t{1} << u)]);
      }
      best[v][mask] = value;
    }
  }
  return best[0][0];
}

/// Throws InvariantViolation if `plan` is not a valid matching for `profile`:
/// at most count(t) partners per type, each a neighbor of its type, and no
/// offline vertex used twice.
inline void check_plan(const TypeProfile& profile, const MatchingPlan& plan) {
  if (plan.partners.size() != profile.entries().size()) throw InvariantViolation("plan: type count mismatch");
  std::vector<char> used(static_cast<std::size_t>(profile.n()), 0);
  int total = 0;
  for (std::size_t i = 0; i < plan.partners.size(); ++i) {
    const auto& entry = profile[i];
    if (static_cast<int>(plan.partners[i].size()) > entry.count) throw InvariantViolation("plan: more partners than copies");
    for (int u : plan.partners[i]) {
      if (!entry.type.contains(u)) throw InvariantViolation("plan: partner is not a neighbor");
      if (used[u]) throw InvariantViolation("plan: offline vertex used twice");
      used[u] = 1;
      ++total;
    }
  }
  if (total != plan.size) throw InvariantViolation("plan: size field disagrees with partner lists");
}

/// A bipartite instance: n offline vertices and the true online profile.
class Instance {
public:
  explicit Instance(TypeProfile truth) : truth_(std::move(truth)), opt_size_(maximum_matching(truth_).size) {}

  int n() const noexcept { return truth_.n(); }
  const TypeProfile& truth() const noexcept { return truth_; }
  /// Size of a maximum matching of the true graph.
  int opt_size() const noexcept { return opt_size_; }

private:
  TypeProfile truth_;
  int opt_size_;
};

// JSON: {"n": int, "types": [{"neighbors": [int...], "count": int}, ...]}

inline void to_json(nlohmann::json& j, const TypeProfile& p) {
  auto types = nlohmann::json::array();
  for (const auto& e : p.entries()) types.push_back({{"neighbors", e.type.neighbors()}, {"count", e.count}});
  j = {{"n", p.n()}, {"types", std::move(types)}};
}

inline void from_json(const nlohmann::json& j, TypeProfile& p) {
  try {
    std::vector<TypeProfile::Entry> entries;
    for (const auto& t : j.at("types")) {
      entries.push_back({VertexType(t.at("neighbors").get<std::vector<int>>()), t.at("count").get<int>()});
    }
    p = TypeProfile(j.at("n").get<int>(), std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("profile json: ") + e.what());
  }
}

}  // namespace tamplus
