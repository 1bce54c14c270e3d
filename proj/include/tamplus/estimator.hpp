// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tamplus/error.hpp"
#include "tamplus/graph.hpp"
#include "tamplus/rng.hpp"

namespace tamplus {

/// Parameters of the sampling phase and of the L1 estimate.
struct EstimatorConfig {
  double epsilon = 0.1;      ///< additive accuracy target
  double delta_prime = 0.1;  ///< allowed failure probability of the estimate
  int n = 1;                 ///< instance size; the padded domain has n + 1 symbols
  double c_sample = 4.0;     ///< constant in front of the sample-size formula

  void validate() const {
    require(epsilon > 0.0 && std::isfinite(epsilon), "estimator: epsilon must be positive");
    require(delta_prime > 0.0 && delta_prime < 1.0, "estimator: delta_prime must lie in (0, 1)");
    require(n >= 1, "estimator: n must be at least 1");
    require(c_sample > 0.0 && std::isfinite(c_sample), "estimator: c_sample must be positive");
  }
};

/// delta' = min(0.1, 1 / max(ln ln ln n, 10)). With `asymptotic` set, the raw
/// 1 / ln ln ln n instead, which is only a probability for very large n.
inline double default_delta_prime(int n, bool asymptotic = false) {
  const double lll = n > 1 ? std::log(std::log(std::log(static_cast<double>(n)))) : -INFINITY;
  if (asymptotic) {
    require(std::isfinite(lll) && lll > 1.0,
            "delta_prime: 1/ln ln ln n is not a probability for n = " + std::to_string(n));
    return 1.0 / lll;
  }
  return std::min(0.1, 1.0 / std::max(std::isfinite(lll) ? lll : 0.0, 10.0));
}

/// Largest epsilon allowed by the competitive-ratio guarantee.
inline double max_epsilon(double alpha, double beta) { return alpha * (1.0 - beta) / (1.0 + beta); }

inline double default_epsilon(double alpha, double beta) { return std::min(0.05, max_epsilon(alpha, beta)); }

/// Even integer s >= c (n+1) ln(1/delta') / (eps^2 ln(n+1)), at least 2.
inline std::int64_t expected_sample_size(const EstimatorConfig& config) {
  config.validate();
  const double r = config.n + 1.0;
  const double raw = config.c_sample * r * std::log(1.0 / config.delta_prime) /
                     (config.epsilon * config.epsilon * std::log(r));
  auto s = static_cast<std::int64_t>(std::ceil(raw));
  if (s % 2 != 0) ++s;
  return std::max<std::int64_t>(s, 2);
}

/// s (1 + sqrt(ln(n+1))); a draw with s1 + s2 above this aborts sampling.
inline double sample_size_limit(const EstimatorConfig& config) {
  return static_cast<double>(expected_sample_size(config)) * (1.0 + std::sqrt(std::log(config.n + 1.0)));
}

/// Poisson variate. Inversion below mean 30, Hoermann's transformed
/// rejection (PTRS) above. Both use only Rng::uniform, so draws are
/// reproducible from the seed.
inline std::int64_t poisson(double mean, Rng& rng) {
  require(mean >= 0.0 && std::isfinite(mean), "poisson: mean must be finite and nonnegative");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double prod = rng.uniform_open0();
    while (prod > limit) {
      ++k;
      prod *= rng.uniform_open0();
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform_open0();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(k);
    }
  }
}

/// Poissonized sample size: two independent halves and the overflow verdict.
struct SampleOutcome {
  std::int64_t s1 = 0;
  std::int64_t s2 = 0;
  double limit = 0.0;
  bool overflowed = false;

  std::int64_t total() const noexcept { return s1 + s2; }
};

inline SampleOutcome draw_sample_size(const EstimatorConfig& config, Rng& rng) {
  const double half = static_cast<double>(expected_sample_size(config)) / 2.0;
  SampleOutcome out;
  out.s1 = poisson(half, rng);
  out.s2 = poisson(half, rng);
  out.limit = sample_size_limit(config);
  out.overflowed = static_cast<double>(out.total()) > out.limit;
  return out;
}

inline SampleOutcome draw_sample_size(const EstimatorConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  return draw_sample_size(config, rng);
}

/// Reference domain of n + 1 symbols built from the advice.
///
/// Symbols [0, r) are the predicted types in profile order, symbol r is the
/// dummy that absorbs every unpredicted type, and the remaining n - r symbols
/// are fillers. q is c-hat(t)/n on predicted symbols and 0 elsewhere.
class PaddedDomain {
public:
  explicit PaddedDomain(TypeProfile advice) : advice_(std::move(advice)) {
    const int n = advice_.n();
    q_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (std::size_t i = 0; i < advice_.entries().size(); ++i) q_[i] = static_cast<double>(advice_[i].count) / n;
  }

  int size() const noexcept { return static_cast<int>(q_.size()); }
  int predicted() const noexcept { return advice_.support_size(); }
  int dummy() const noexcept { return predicted(); }
  int fillers() const noexcept { return size() - predicted() - 1; }
  const std::vector<double>& q() const noexcept { return q_; }
  const TypeProfile& advice() const noexcept { return advice_; }

  /// Symbol of an arriving type: its own if predicted, else the dummy.
  int classify(const VertexType& type) const {
    const int i = advice_.index_of(type);
    return i < 0 ? dummy() : i;
  }

  /// Symbol of every entry of `truth`, for classifying arrivals by index.
  std::vector<int> classify_all(const TypeProfile& truth) const {
    std::vector<int> out(truth.entries().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = classify(truth[i].type);
    return out;
  }

private:
  TypeProfile advice_;
  std::vector<double> q_;
};

inline PaddedDomain build_padded_domain(const TypeProfile& advice) { return PaddedDomain(advice); }

/// Plug-in L1 estimate sum |p-hat(sym) - q(sym)| from per-symbol sample
/// counts. Result lies in [0, 2].
inline double estimate_l1_from_counts(const PaddedDomain& domain, std::span<const std::int64_t> counts) {
  require(static_cast<int>(counts.size()) == domain.size(), "estimate_l1: counts do not cover the domain");
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  require(total > 0, "estimate_l1: empty sample");
  const auto& q = domain.q();
  const double inv = 1.0 / static_cast<double>(total);
  double sum = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) sum += std::abs(static_cast<double>(counts[i]) * inv - q[i]);
  return std::clamp(sum, 0.0, 2.0);
}

inline double estimate_l1(const PaddedDomain& domain, std::span<const VertexType> sample) {
  require(!sample.empty(), "estimate_l1: empty sample");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(domain.size()), 0);
  for (const auto& t : sample) ++counts[domain.classify(t)];
  return estimate_l1_from_counts(domain, counts);
}

}  // namespace tamplus
