// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tamplus/error.hpp"
#include "tamplus/estimator.hpp"
#include "tamplus/graph.hpp"
#include "tamplus/harness.hpp"
#include "tamplus/online.hpp"
#include "tamplus/predictions.hpp"
#include "tamplus/rng.hpp"

namespace tamplus {

struct NamedPair {
  std::string name;
  PredictionPair pair;
};

namespace detail {

inline TypeProfile singletons(int n, const std::vector<int>& counts) {
  std::vector<TypeProfile::Entry> entries;
  for (std::size_t i = 0; i < counts.size(); ++i) entries.push_back({VertexType{static_cast<int>(i)}, counts[i]});
  return TypeProfile(n, std::move(entries));
}

}  // namespace detail

/// Fixed distribution pairs the estimator is tuned against:
///   uniform      p = q uniform over n singleton types (L1 = 0)
///   geometric    p geometric over singletons, q a perturbation at L1 ~ 0.5
///   two-point    p = (1/2, 1/2), q = (1/4, 1/4, 1/2) on a third type (L1 = 1)
///   dummy-heavy  80% of p's mass outside q's support (L1 ~ 1.6)
/// Requires n >= 4.
inline std::vector<NamedPair> calibration_pairs(int n, std::uint64_t seed) {
  require(n >= 4, "calibration_pairs: n must be at least 4");
  std::vector<NamedPair> out;

  const TypeProfile uniform = detail::singletons(n, std::vector<int>(static_cast<std::size_t>(n), 1));
  out.push_back({"uniform", PredictionPair(uniform, uniform)});

  std::vector<int> geo;
  int left = n;
  for (int share = n / 2; share > 0 && left > 0; share /= 2) {
    geo.push_back(share);
    left -= share;
  }
  geo[0] += left;
  const TypeProfile geometric = detail::singletons(n, geo);
  out.push_back({"geometric", PredictionPair(geometric, perturb(geometric, 2 * (n / 4), derive_seed(seed, {1})))});

  const int half = n / 2;
  const TypeProfile two_point = detail::singletons(n, {half, n - half});
  const int quarter = n / 4;
  const TypeProfile two_point_advice = detail::singletons(n, {quarter, quarter, n - 2 * quarter});
  out.push_back({"two-point", PredictionPair(two_point, two_point_advice)});

  out.push_back({"dummy-heavy", PredictionPair(uniform, perturb(uniform, 2 * static_cast<int>(0.8 * n), derive_seed(seed, {2})))});
  return out;
}

/// Outcome of repeated estimator runs on one pair.
struct EstimatorTrialStats {
  std::string name;
  double l1_true = 0.0;
  double c_sample = 0.0;
  int trials = 0;
  double pass_rate = 0.0;      ///< |L1-hat - L1| <= epsilon
  double overflow_rate = 0.0;  ///< s1 + s2 above the limit
  double joint_rate = 0.0;     ///< no overflow and within epsilon
  double mean_abs_error = 0.0;
};

/// Draws s1 + s2 i.i.d. arrivals from the truth distribution and estimates
/// L1 against the padded advice domain, `trials` times.
inline EstimatorTrialStats estimator_trials(const NamedPair& named, const EstimatorConfig& config, int trials,
                                            std::uint64_t seed, int jobs = 1) {
  config.validate();
  require(config.n == named.pair.n(), "estimator_trials: config n differs from pair n");
  const PaddedDomain domain(named.pair.advice);
  const TypeProfile& truth = named.pair.truth;
  const std::vector<int> symbol_of_type = domain.classify_all(truth);
  std::vector<int> symbol_of_vertex;
  for (int t : truth.expand()) symbol_of_vertex.push_back(symbol_of_type[t]);
  const double l1 = l1_distance(truth, named.pair.advice);

  struct One {
    bool within = false;
    bool overflow = false;
    double abs_error = 0.0;
  };
  std::vector<One> results(static_cast<std::size_t>(trials));
  parallel_for(results.size(), jobs, [&](std::size_t t) {
    Rng rng(derive_seed(seed, {t}));
    const SampleOutcome size = draw_sample_size(config, rng);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(domain.size()), 0);
    for (std::int64_t s = 0; s < size.total(); ++s) ++counts[symbol_of_vertex[rng.below(symbol_of_vertex.size())]];
    const double est = estimate_l1_from_counts(domain, counts);
    results[t] = {std::abs(est - l1) <= config.epsilon, size.overflowed, std::abs(est - l1)};
  });

  EstimatorTrialStats st;
  st.name = named.name;
  st.l1_true = l1;
  st.c_sample = config.c_sample;
  st.trials = trials;
  for (const auto& r : results) {
    st.pass_rate += r.within;
    st.overflow_rate += r.overflow;
    st.joint_rate += r.within && !r.overflow;
    st.mean_abs_error += r.abs_error;
  }
  st.pass_rate /= trials;
  st.overflow_rate /= trials;
  st.joint_rate /= trials;
  st.mean_abs_error /= trials;
  return st;
}

struct CalibrationReport {
  int n = 0;
  double epsilon = 0.0;
  double delta_prime = 0.0;
  int trials = 0;
  std::vector<EstimatorTrialStats> rows;
  std::optional<double> chosen;  ///< smallest c_sample meeting the contract on every pair

  bool passes(double c_sample) const {
    bool any = false;
    for (const auto& r : rows) {
      if (r.c_sample != c_sample) continue;
      any = true;
      if (r.pass_rate < 1.0 - delta_prime) return false;
    }
    return any;
  }
};

/// Sweeps c_sample and records, per value and pair, how often the estimate
/// lands within epsilon. The contract holds at c when every pair does so in
/// at least a 1 - delta' fraction of trials.
inline CalibrationReport calibrate(int n, double epsilon, double delta_prime, const std::vector<double>& c_values,
                                   int trials, std::uint64_t seed, int jobs = 1) {
  require(trials >= 1, "calibrate: trials must be at least 1");
  CalibrationReport rep;
  rep.n = n;
  rep.epsilon = epsilon;
  rep.delta_prime = delta_prime;
  rep.trials = trials;
  const auto pairs = calibration_pairs(n, seed);
  for (double c : c_values) {
    EstimatorConfig config{epsilon, delta_prime, n, c};
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      rep.rows.push_back(estimator_trials(pairs[i], config, trials, derive_seed(seed, {0xCA1, i}), jobs));
    }
    if (!rep.chosen && rep.passes(c)) rep.chosen = c;
  }
  return rep;
}

inline void to_json(nlohmann::json& j, const CalibrationReport& rep) {
  auto rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"distribution", r.name},
                    {"l1_true", r.l1_true},
                    {"c_sample", r.c_sample},
                    {"trials", r.trials},
                    {"pass_rate", r.pass_rate},
                    {"overflow_rate", r.overflow_rate},
                    {"joint_rate", r.joint_rate},
                    {"mean_abs_error", r.mean_abs_error}});
  }
  j = {{"n", rep.n},
       {"epsilon", rep.epsilon},
       {"delta_prime", rep.delta_prime},
       {"trials", rep.trials},
       {"rows", rows},
       {"chosen_c_sample", rep.chosen ? nlohmann::json(*rep.chosen) : nlohmann::json(nullptr)}};
}

/// Five types over n = 50 with counts 20, 12, 10, 5, 3. Type i is adjacent
/// to its own block of count(i) offline vertices, so n-hat = n.
inline TypeProfile fidelity_profile() {
  const std::vector<int> counts{20, 12, 10, 5, 3};
  std::vector<TypeProfile::Entry> entries;
  int offset = 0;
  for (int c : counts) {
    std::vector<int> block(static_cast<std::size_t>(c));
    std::iota(block.begin(), block.end(), offset);
    offset += c;
    entries.push_back({VertexType(std::move(block)), c});
  }
  return TypeProfile(offset, std::move(entries));
}

/// Per-type frequencies of the with-replacement sample built during the
/// sampling phase, averaged over runs.
struct SamplingFidelity {
  std::vector<double> expected;   ///< c*(t) / n
  std::vector<double> mean;       ///< mean per-run sample fraction
  std::vector<double> std_error;  ///< standard error of `mean`
  int runs = 0;

  /// Largest |mean - expected| in units of standard error.
  double max_z() const {
    double z = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      if (std_error[i] > 0.0) z = std::max(z, std::abs(mean[i] - expected[i]) / std_error[i]);
    }
    return z;
  }
};

/// Runs Test-and-Match+ with advice equal to `truth` (so sample symbols are
/// truth types) and collects the sample gathered before the decision.
inline SamplingFidelity sampling_fidelity(const TypeProfile& truth, const TamParams& params, int runs,
                                          std::uint64_t seed) {
  require(runs >= 2, "sampling_fidelity: need at least 2 runs");
  const Instance instance(truth);
  const std::size_t types = truth.entries().size();
  std::vector<double> sum(types, 0.0), sum_sq(types, 0.0);
  for (int r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    const std::vector<int> order = random_permutation(truth.n(), rng);
    TestAndMatch tam(truth, params, rng.next());
    if (tam.phase() != Phase::Sampling) throw InvariantViolation("sampling_fidelity: run skipped sampling");
    run_online(tam, instance, order);
    const auto& counts = tam.sample_counts();
    const double total = static_cast<double>(tam.log().sampled);
    for (std::size_t t = 0; t < types; ++t) {
      const double f = static_cast<double>(counts[t]) / total;
      sum[t] += f;
      sum_sq[t] += f * f;
    }
  }
  SamplingFidelity out;
  out.runs = runs;
  for (std::size_t t = 0; t < types; ++t) {
    const double m = sum[t] / runs;
    const double var = std::max(0.0, (sum_sq[t] - runs * m * m) / (runs - 1));
    out.expected.push_back(static_cast<double>(truth[t].count) / truth.n());
    out.mean.push_back(m);
    out.std_error.push_back(std::sqrt(var / runs));
  }
  return out;
}

}  // namespace tamplus
