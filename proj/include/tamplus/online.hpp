// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tamplus/error.hpp"
#include "tamplus/estimator.hpp"
#include "tamplus/graph.hpp"
#include "tamplus/rng.hpp"

namespace tamplus {

/// Offline vertex chosen for an arrival, or nullopt to leave it unmatched.
using Decision = std::optional<int>;

/// An online matching algorithm fed one arrival at a time.
class OnlineAlgorithm {
public:
  virtual ~OnlineAlgorithm() = default;
  /// Returns an unmatched neighbor of `type` or nullopt. Must never return an
  /// offline vertex it returned before.
  virtual Decision on_arrival(const VertexType& type) = 0;
  /// Called once after the last arrival.
  virtual void finish() {}
};

/// Follows a precomputed maximum matching of the predicted graph.
///
/// Keeps a copy c of the advice counts. An arrival of type t with c(t) > 0
/// takes the next unused partner that the plan reserves for t, if any, and
/// decrements c(t) either way. Arrivals with c(t) = 0 are skipped. Vertices
/// are never matched outside the plan.
class Mimic : public OnlineAlgorithm {
public:
  Mimic(TypeProfile advice, MatchingPlan plan)
      : advice_(std::move(advice)), plan_(std::move(plan)), used_(static_cast<std::size_t>(advice_.n()), 0) {
    require(plan_.partners.size() == advice_.entries().size(), "mimic: plan does not belong to advice");
    remaining_.resize(advice_.entries().size());
    for (std::size_t i = 0; i < remaining_.size(); ++i) remaining_[i] = advice_[i].count;
    cursor_.assign(remaining_.size(), 0);
  }

  Mimic(const TypeProfile& advice) : Mimic(advice, maximum_matching(advice)) {}

  Decision on_arrival(const VertexType& type) override {
    const int t = advice_.index_of(type);
    if (t < 0 || remaining_[t] == 0) return std::nullopt;
    --remaining_[t];
    const auto& partners = plan_.partners[t];
    if (cursor_[t] == partners.size()) return std::nullopt;
    const int u = partners[cursor_[t]++];
    used_[u] = 1;
    return u;
  }

  int remaining(const VertexType& type) const {
    const int t = advice_.index_of(type);
    return t < 0 ? 0 : remaining_[t];
  }

  const std::vector<char>& used() const noexcept { return used_; }
  const MatchingPlan& plan() const noexcept { return plan_; }

private:
  TypeProfile advice_;
  MatchingPlan plan_;
  std::vector<char> used_;
  std::vector<int> remaining_;
  std::vector<std::size_t> cursor_;
};

/// Ranking: a uniformly random priority over the offline vertices that are
/// still free at construction; each arrival takes its free neighbor of
/// highest priority. Vertices already used are treated as absent.
class Ranking : public OnlineAlgorithm {
public:
  Ranking(std::vector<char> used, Rng& rng) : used_(std::move(used)) {
    rank_.assign(used_.size(), std::numeric_limits<int>::max());
    std::vector<int> free;
    for (std::size_t u = 0; u < used_.size(); ++u) {
      if (!used_[u]) free.push_back(static_cast<int>(u));
    }
    rng.shuffle(std::span<int>(free));
    for (std::size_t r = 0; r < free.size(); ++r) rank_[free[r]] = static_cast<int>(r);
  }

  Ranking(int n, Rng& rng) : Ranking(std::vector<char>(static_cast<std::size_t>(n), 0), rng) {}

  Decision on_arrival(const VertexType& type) override {
    int best = -1;
    for (int u : type.neighbors()) {
      if (!used_[u] && (best < 0 || rank_[u] < rank_[best])) best = u;
    }
    if (best < 0) return std::nullopt;
    used_[best] = 1;
    return best;
  }

private:
  std::vector<char> used_;
  std::vector<int> rank_;
};

/// Matches each arrival to its lowest-index free neighbor.
class Greedy : public OnlineAlgorithm {
public:
  explicit Greedy(int n) : used_(static_cast<std::size_t>(n), 0) {}

  Decision on_arrival(const VertexType& type) override {
    for (int u : type.neighbors()) {
      if (!used_[u]) {
        used_[u] = 1;
        return u;
      }
    }
    return std::nullopt;
  }

private:
  std::vector<char> used_;
};

enum class Phase { PreCheck, Sampling, MimicRest, BaselineRest, BaselineWhole };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::PreCheck: return "PreCheck";
    case Phase::Sampling: return "Sampling";
    case Phase::MimicRest: return "MimicRest";
    case Phase::BaselineRest: return "BaselineRest";
    case Phase::BaselineWhole: return "BaselineWhole";
  }
  return "?";
}

/// Why the run ended up in its terminal phase.
struct DecisionLog {
  Phase branch = Phase::PreCheck;
  std::optional<double> l1_hat;
  std::int64_t k = 0;       ///< sample size s1 + s2 (0 when no sampling happened)
  int k_prime = 0;          ///< arrivals consumed while sampling
  std::int64_t sampled = 0; ///< sample elements actually gathered
  bool below_alpha = false; ///< n-hat / n < alpha
  bool overflowed = false;  ///< s1 + s2 exceeded the sample size limit
  bool exhausted = false;   ///< stream ended before the sample was complete
};

struct TamParams {
  double alpha = 0.5;
  double beta = 0.696;
  EstimatorConfig estimator;
};

/// Learning-augmented matching with a sampling-based test of the advice.
///
/// Computes a maximum matching of the predicted graph and runs Mimic on the
/// first arrivals while collecting a with-replacement sample of the arrival
/// distribution. Once s1 + s2 elements are gathered, the L1 distance between
/// the arrival distribution and the advice is estimated; the run continues
/// with Mimic when the estimate is at most tau - epsilon and switches to
/// Ranking on the still-free offline vertices otherwise. Advice with
/// n-hat / n < alpha, or an oversized Poisson draw, sends the whole input to
/// Ranking.
class TestAndMatch : public OnlineAlgorithm {
public:
  TestAndMatch(const TypeProfile& advice, const TamParams& params, std::uint64_t seed)
      : params_(params), rng_(seed), mimic_(advice), domain_(advice) {
    require(params.alpha > 0.0 && params.alpha <= 1.0, "test-and-match: alpha must lie in (0, 1]");
    require(params.beta > 0.0 && params.beta < 1.0, "test-and-match: beta must lie in (0, 1)");
    params.estimator.validate();
    require(params.estimator.n == advice.n(), "test-and-match: estimator n differs from advice n");
    require(params.estimator.epsilon <= max_epsilon(params.alpha, params.beta) * (1.0 + 1e-12),
            "test-and-match: epsilon exceeds alpha (1 - beta) / (1 + beta)");
    n_ = advice.n();
    n_hat_ = mimic_.plan().size;
    tau_ = 2.0 * n_hat_ / n_ * (1.0 - params.beta) / (1.0 + params.beta);

    if (static_cast<double>(n_hat_) / n_ < params.alpha) {
      log_.below_alpha = true;
      switch_to_baseline(Phase::BaselineWhole);
      return;
    }
    const SampleOutcome outcome = draw_sample_size(params.estimator, rng_);
    log_.k = outcome.total();
    if (outcome.overflowed) {
      log_.overflowed = true;
      switch_to_baseline(Phase::BaselineWhole);
      return;
    }
    phase_ = Phase::Sampling;
    counts_.assign(static_cast<std::size_t>(domain_.size()), 0);
    seen_.reserve(static_cast<std::size_t>(n_));
  }

  Decision on_arrival(const VertexType& type) override {
    switch (phase_) {
      case Phase::Sampling: return sample_step(type);
      case Phase::MimicRest: return mimic_.on_arrival(type);
      case Phase::BaselineRest:
      case Phase::BaselineWhole: return baseline_->on_arrival(type);
      case Phase::PreCheck: break;
    }
    throw InvariantViolation("test-and-match: arrival in PreCheck phase");
  }

  /// Completes a pending sample from the stored arrivals and decides.
  void finish() override {
    if (phase_ != Phase::Sampling) return;
    log_.exhausted = true;
    if (seen_.empty()) {
      switch_to_baseline(Phase::BaselineWhole);
      return;
    }
    while (log_.sampled < log_.k) draw_from_seen();
    decide();
  }

  Phase phase() const noexcept { return phase_; }
  const DecisionLog& log() const noexcept { return log_; }
  int n_hat() const noexcept { return n_hat_; }
  double tau() const noexcept { return tau_; }
  const Mimic& mimic() const noexcept { return mimic_; }
  const PaddedDomain& domain() const noexcept { return domain_; }
  /// Per-symbol sample counts gathered so far.
  const std::vector<std::int64_t>& sample_counts() const noexcept { return counts_; }

private:
  // Flip heads with probability i/n: heads re-draws a stored arrival, tails
  // consumes the current one. Returns once the arrival is consumed or the
  // sample is complete; in the latter case the arrival goes to the new phase.
  Decision sample_step(const VertexType& type) {
    for (;;) {
      const int i = static_cast<int>(seen_.size());
      if (i > 0 && rng_.uniform() < static_cast<double>(i) / n_) {
        draw_from_seen();
        if (log_.sampled == log_.k) {
          decide();
          return on_arrival(type);
        }
        continue;
      }
      const int symbol = domain_.classify(type);
      seen_.push_back(symbol);
      ++counts_[symbol];
      ++log_.sampled;
      log_.k_prime = static_cast<int>(seen_.size());
      Decision d = mimic_.on_arrival(type);
      if (log_.sampled == log_.k) decide();
      return d;
    }
  }

  void draw_from_seen() {
    ++counts_[seen_[rng_.below(seen_.size())]];
    ++log_.sampled;
  }

  void decide() {
    const double estimate = estimate_l1_from_counts(domain_, counts_);
    log_.l1_hat = estimate;
    if (estimate <= tau_ - params_.estimator.epsilon) {
      phase_ = Phase::MimicRest;
      log_.branch = phase_;
    } else {
      switch_to_baseline(Phase::BaselineRest);
    }
  }

  void switch_to_baseline(Phase phase) {
    phase_ = phase;
    log_.branch = phase;
    baseline_ = std::make_unique<Ranking>(mimic_.used(), rng_);
  }

  TamParams params_;
  Rng rng_;
  Mimic mimic_;
  PaddedDomain domain_;
  std::unique_ptr<Ranking> baseline_;
  Phase phase_ = Phase::PreCheck;
  DecisionLog log_;
  int n_ = 0;
  int n_hat_ = 0;
  double tau_ = 0.0;
  std::vector<int> seen_;  // symbols of consumed arrivals
  std::vector<std::int64_t> counts_;
};

/// Outcome of feeding one arrival order to an algorithm.
struct RunResult {
  int matches = 0;
  std::vector<Decision> decisions;  ///< one per arrival, in arrival order
};

inline std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<int>(perm));
  return perm;
}

/// Feeds the online vertices of `instance` in `order` (indices into the
/// expanded truth profile). Throws InvariantViolation if the algorithm picks
/// a non-neighbor or reuses an offline vertex.
inline RunResult run_online(OnlineAlgorithm& algorithm, const Instance& instance, std::span<const int> order) {
  const int n = instance.n();
  require(static_cast<int>(order.size()) == n, "run_online: permutation length differs from n");
  const std::vector<int> type_of = instance.truth().expand();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  RunResult result;
  result.decisions.reserve(order.size());
  for (int v : order) {
    require(v >= 0 && v < n && !seen[v], "run_online: order is not a permutation");
    seen[v] = 1;
    const VertexType& type = instance.truth()[type_of[v]].type;
    const Decision d = algorithm.on_arrival(type);
    if (d) {
      if (!type.contains(*d)) throw InvariantViolation("run_online: matched to a non-neighbor");
      if (used[*d]) throw InvariantViolation("run_online: offline vertex matched twice");
      used[*d] = 1;
      ++result.matches;
    }
    result.decisions.push_back(d);
  }
  algorithm.finish();
  return result;
}

}  // namespace tamplus
