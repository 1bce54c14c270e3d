// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <span>
#include <vector>

#include <json.hpp>

#include "tamplus/error.hpp"
#include "tamplus/graph.hpp"
#include "tamplus/rng.hpp"

namespace tamplus {

/// L1 distance between two count profiles over the union of their supports.
/// Equals n times the L1 distance of the induced distributions.
inline int l1_counts(const TypeProfile& a, const TypeProfile& b) {
  require(a.n() == b.n(), "l1_counts: profiles have different n");
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  std::size_t i = 0, j = 0;
  int total = 0;
  while (i < ea.size() || j < eb.size()) {
    if (j == eb.size() || (i < ea.size() && ea[i].type < eb[j].type)) {
      total += ea[i++].count;
    } else if (i == ea.size() || eb[j].type < ea[i].type) {
      total += eb[j++].count;
    } else {
      total += std::abs(ea[i++].count - eb[j++].count);
    }
  }
  return total;
}

/// L1(p, q) for p = a / n and q = b / n.
inline double l1_distance(const TypeProfile& a, const TypeProfile& b) {
  return static_cast<double>(l1_counts(a, b)) / a.n();
}

/// True profile together with the advice handed to the algorithm.
struct PredictionPair {
  TypeProfile truth;
  TypeProfile advice;

  PredictionPair(TypeProfile truth_profile, TypeProfile advice_profile)
      : truth(std::move(truth_profile)), advice(std::move(advice_profile)) {
    require(truth.n() == advice.n(), "prediction pair: truth and advice have different n");
  }

  int n() const noexcept { return truth.n(); }
  int l1() const { return l1_counts(truth, advice); }
};

inline void to_json(nlohmann::json& j, const PredictionPair& p) { j = {{"truth", p.truth}, {"advice", p.advice}}; }

inline PredictionPair prediction_pair_from_json(const nlohmann::json& j) {
  try {
    return PredictionPair(j.at("truth").get<TypeProfile>(), j.at("advice").get<TypeProfile>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("prediction pair json: ") + e.what());
  }
}

/// Upper bound n-hat + L1(c*, c-hat) / 2 on the optimal matching size.
inline double upper_bound_opt(const PredictionPair& pair, int n_hat) {
  return n_hat + pair.l1() / 2.0;
}

/// Counts arrivals that exceed the advice for their type, scanning `arrivals`
/// (indices into `truth`'s entries) in order.
inline int count_unpredicted(const TypeProfile& truth, const TypeProfile& advice, std::span<const int> arrivals) {
  std::vector<int> budget(truth.entries().size());
  for (std::size_t i = 0; i < budget.size(); ++i) budget[i] = advice.count(truth[i].type);
  int unpredicted = 0;
  for (int t : arrivals) {
    if (budget[t] > 0) {
      --budget[t];
    } else {
      ++unpredicted;
    }
  }
  return unpredicted;
}

namespace detail {

/// Random type absent from `truth`, with degree drawn from the degree
/// distribution of truth's online vertices.
inline VertexType fresh_type(const TypeProfile& truth, const std::vector<int>& type_of, Rng& rng,
                             std::vector<int>& scratch) {
  const int n = truth.n();
  for (int attempt = 0;; ++attempt) {
    std::size_t degree;
    if (attempt < 64) {
      degree = truth[type_of[rng.below(type_of.size())]].type.degree();
    } else {
      degree = rng.below(static_cast<std::uint64_t>(n) + 1);
    }
    std::iota(scratch.begin(), scratch.end(), 0);
    for (std::size_t k = 0; k < degree; ++k) {
      std::swap(scratch[k], scratch[k + rng.below(n - k)]);
    }
    VertexType candidate(std::vector<int>(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(degree)));
    if (truth.index_of(candidate) < 0) return candidate;
  }
}

}  // namespace detail

/// Advice at exactly `target_l1_counts` from `truth`.
///
/// Removes target/2 uniformly chosen online vertices from the truth and adds
/// target/2 vertices, each either to a truth type that lost nothing or to a
/// fresh type outside truth's support. Removals and additions never touch
/// the same type, so every moved unit contributes exactly 2 to the distance.
inline TypeProfile perturb(const TypeProfile& truth, int target_l1_counts, std::uint64_t seed) {
  const int n = truth.n();
  require(target_l1_counts >= 0 && target_l1_counts <= 2 * n, "perturb: target L1 outside [0, 2n]");
  require(target_l1_counts % 2 == 0, "perturb: target L1 must be even");
  const int moves = target_l1_counts / 2;
  if (moves == 0) return truth;

  Rng rng(seed);
  std::vector<int> type_of = truth.expand();
  std::vector<int> counts(truth.entries().size());
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = truth[i].count;

  std::vector<int> order(type_of.begin(), type_of.end());
  std::vector<char> touched(counts.size(), 0);
  for (int k = 0; k < moves; ++k) {
    std::swap(order[k], order[k + rng.below(n - k)]);
    --counts[order[k]];
    touched[order[k]] = 1;
  }

  std::vector<int> untouched;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!touched[i]) untouched.push_back(static_cast<int>(i));
  }

  std::vector<TypeProfile::Entry> entries;
  entries.reserve(counts.size() + moves);
  std::vector<int> scratch(n);
  for (int k = 0; k < moves; ++k) {
    if (!untouched.empty() && rng.bernoulli(0.5)) {
      ++counts[untouched[rng.below(untouched.size())]];
    } else {
      entries.push_back({detail::fresh_type(truth, type_of, rng, scratch), 1});
    }
  }
  for (std::size_t i = 0; i < counts.size(); ++i) entries.push_back({truth[i].type, counts[i]});
  return TypeProfile(n, std::move(entries));
}

}  // namespace tamplus
