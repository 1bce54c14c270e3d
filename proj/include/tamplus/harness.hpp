// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tamplus/error.hpp"
#include "tamplus/estimator.hpp"
#include "tamplus/graph.hpp"
#include "tamplus/online.hpp"
#include "tamplus/predictions.hpp"
#include "tamplus/rng.hpp"

namespace tamplus {

// ---------------------------------------------------------------------------
// Instance families
// ---------------------------------------------------------------------------

struct FamilyParams {
  int degree = 3;    ///< neighbors per matchable online vertex
  double rho = 0.5;  ///< matchable fraction for "isolated"
};

namespace detail {

// `anchor` plus up to degree-1 further distinct picks from `pool`.
inline VertexType anchored_type(int anchor, const std::vector<int>& pool, int degree, Rng& rng) {
  std::vector<int> nb{anchor};
  const int want = std::min<int>(degree, static_cast<int>(pool.size()));
  while (static_cast<int>(nb.size()) < want) {
    const int u = pool[rng.below(pool.size())];
    if (std::find(nb.begin(), nb.end(), u) == nb.end()) nb.push_back(u);
  }
  return VertexType(std::move(nb));
}

}  // namespace detail

/// Builds an instance of a named family.
///
///   perfect     random perfect matching plus degree-1 random extra edges per
///               online vertex; n* = n.
///   isolated    round(rho n) online vertices matchable inside a set of as many
///               offline vertices, the rest have no edges; n* = round(rho n).
///   triangular  online vertex j is adjacent to offline 0..j; n* = n.
inline Instance generate_instance(std::string_view family, int n, const FamilyParams& params, std::uint64_t seed) {
  require(n >= 1, "generate_instance: n must be at least 1");
  require(params.degree >= 1, "generate_instance: degree must be at least 1");
  Rng rng(seed);
  std::vector<TypeProfile::Entry> entries;
  entries.reserve(static_cast<std::size_t>(n));
  if (family == "perfect") {
    std::vector<int> offline = random_permutation(n, rng);
    std::vector<int> all(offline);
    for (int v = 0; v < n; ++v) entries.push_back({detail::anchored_type(offline[v], all, params.degree, rng), 1});
  } else if (family == "isolated") {
    require(params.rho >= 0.0 && params.rho <= 1.0, "generate_instance: rho must lie in [0, 1]");
    const int m = static_cast<int>(std::lround(params.rho * n));
    std::vector<int> offline = random_permutation(n, rng);
    std::vector<int> pool(offline.begin(), offline.begin() + m);
    for (int v = 0; v < m; ++v) entries.push_back({detail::anchored_type(pool[v], pool, params.degree, rng), 1});
    if (m < n) entries.push_back({VertexType{}, n - m});
  } else if (family == "triangular") {
    for (int j = 0; j < n; ++j) {
      std::vector<int> nb(static_cast<std::size_t>(j) + 1);
      std::iota(nb.begin(), nb.end(), 0);
      entries.push_back({VertexType(std::move(nb)), 1});
    }
  } else {
    throw ValidationError("generate_instance: unknown family '" + std::string(family) + "'");
  }
  return Instance(TypeProfile(n, std::move(entries)));
}

// ---------------------------------------------------------------------------
// Experiment description
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  std::string family = "perfect";
  FamilyParams family_params;
  int n = 1000;
  double alpha = 0.5;
  double beta = 0.696;
  std::optional<double> epsilon;      ///< default: min(0.05, alpha (1-beta)/(1+beta))
  std::optional<double> delta_prime;  ///< default: default_delta_prime(n)
  double c_sample = 4.0;
  std::vector<double> error_grid{0.0};  ///< target L1(p, q) values
  int trials = 100;
  std::uint64_t seed = 1;
  int adversary_k = 1;  ///< candidate perturbations per trial; the most harmful is kept

  void validate() const {
    require(n >= 1, "experiment: n must be at least 1");
    require(alpha > 0.0 && alpha <= 1.0, "experiment: alpha must lie in (0, 1]");
    require(beta > 0.0 && beta < 1.0, "experiment: beta must lie in (0, 1)");
    require(trials >= 1, "experiment: trials must be at least 1");
    require(adversary_k >= 1, "experiment: adversary_k must be at least 1");
    require(!error_grid.empty(), "experiment: error grid is empty");
    for (double x : error_grid) require(x >= 0.0 && x <= 2.0, "experiment: grid value outside [0, 2]");
    tam_params().estimator.validate();
  }

  TamParams tam_params() const {
    TamParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.estimator.n = n;
    p.estimator.epsilon = epsilon.value_or(default_epsilon(alpha, beta));
    p.estimator.delta_prime = delta_prime.value_or(default_delta_prime(n));
    p.estimator.c_sample = c_sample;
    return p;
  }

  /// L1 target in counts: the even integer nearest to l1 * n.
  int target_counts(double l1) const {
    const long half = std::lround(l1 * n / 2.0);
    return static_cast<int>(std::clamp<long>(2 * half, 0, 2L * n));
  }
};

inline void to_json(nlohmann::json& j, const ExperimentSpec& s) {
  nlohmann::json est = {{"c_sample", s.c_sample}};
  if (s.epsilon) est["epsilon"] = *s.epsilon;
  if (s.delta_prime) est["delta_prime"] = *s.delta_prime;
  j = {{"family", s.family},
       {"family_params", {{"degree", s.family_params.degree}, {"rho", s.family_params.rho}}},
       {"n", s.n},
       {"alpha", s.alpha},
       {"beta", s.beta},
       {"estimator", est},
       {"error_grid", s.error_grid},
       {"trials", s.trials},
       {"seed", s.seed},
       {"adversary_k", s.adversary_k}};
}

inline void from_json(const nlohmann::json& j, ExperimentSpec& s) {
  try {
    ExperimentSpec out;
    out.family = j.value("family", out.family);
    if (j.contains("family_params")) {
      const auto& fp = j.at("family_params");
      out.family_params.degree = fp.value("degree", out.family_params.degree);
      out.family_params.rho = fp.value("rho", out.family_params.rho);
    }
    out.n = j.at("n").get<int>();
    out.alpha = j.value("alpha", out.alpha);
    out.beta = j.value("beta", out.beta);
    if (j.contains("estimator")) {
      const auto& e = j.at("estimator");
      if (e.contains("epsilon")) out.epsilon = e.at("epsilon").get<double>();
      if (e.contains("delta_prime")) out.delta_prime = e.at("delta_prime").get<double>();
      out.c_sample = e.value("c_sample", out.c_sample);
    }
    out.error_grid = j.at("error_grid").get<std::vector<double>>();
    out.trials = j.at("trials").get<int>();
    out.seed = j.value("seed", out.seed);
    out.adversary_k = j.value("adversary_k", out.adversary_k);
    s = std::move(out);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("experiment json: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

struct TrialRecord {
  std::uint64_t seed = 0;
  Phase branch = Phase::PreCheck;
  int matches = 0;
  int n_star = 0;
  int n_hat = 0;
  int l1_counts = 0;
  double l1_true = 0.0;
  std::optional<double> l1_hat;
  std::int64_t k = 0;
  int k_prime = 0;
  int mimic_matches = 0;  ///< Mimic alone on the same arrival order
  bool lemma1_ok = true;  ///< mimic_matches >= n_hat - l1_counts / 2
  bool lemma2_ok = true;  ///< n_star <= n_hat + l1_counts / 2
  bool feasible_ok = true;  ///< matches <= n_star
  std::optional<double> ratio;

  bool ok() const noexcept { return lemma1_ok && lemma2_ok && feasible_ok; }
};

inline void to_json(nlohmann::json& j, const TrialRecord& r) {
  j = {{"seed", r.seed},
       {"branch", std::string(to_string(r.branch))},
       {"matches", r.matches},
       {"n_star", r.n_star},
       {"n_hat", r.n_hat},
       {"l1_true", r.l1_true},
       {"l1_hat", r.l1_hat ? nlohmann::json(*r.l1_hat) : nlohmann::json(nullptr)},
       {"k", r.k},
       {"k_prime", r.k_prime},
       {"lemma1_ok", r.lemma1_ok},
       {"lemma2_ok", r.lemma2_ok},
       {"ratio", r.ratio ? nlohmann::json(*r.ratio) : nlohmann::json(nullptr)}};
}

/// Independent random streams of one trial, all derived from its seed.
struct TrialSetup {
  std::uint64_t seed;
  std::uint64_t advice_seed;
  std::uint64_t algorithm_seed;
  std::vector<int> order;

  TrialSetup(std::uint64_t trial_seed, int n) : seed(trial_seed) {
    Rng rng(trial_seed);
    advice_seed = rng.next();
    algorithm_seed = rng.next();
    order = random_permutation(n, rng);
  }
};

inline std::uint64_t trial_seed(std::uint64_t base, std::size_t cell, std::size_t trial) {
  return derive_seed(base, {cell, trial});
}

/// One Test-and-Match+ run on `instance` with the given advice, plus the
/// deterministic per-trial checks.
inline TrialRecord run_trial_with_advice(const Instance& instance, const TypeProfile& advice,
                                         const TamParams& params, std::uint64_t seed) {
  const TrialSetup setup(seed, instance.n());
  TestAndMatch tam(advice, params, setup.algorithm_seed);
  const RunResult run = run_online(tam, instance, setup.order);

  Mimic mimic(advice, tam.mimic().plan());
  const RunResult mimic_run = run_online(mimic, instance, setup.order);

  TrialRecord r;
  r.seed = seed;
  r.branch = tam.log().branch;
  r.matches = run.matches;
  r.n_star = instance.opt_size();
  r.n_hat = tam.n_hat();
  r.l1_counts = l1_counts(instance.truth(), advice);
  r.l1_true = static_cast<double>(r.l1_counts) / instance.n();
  r.l1_hat = tam.log().l1_hat;
  r.k = tam.log().k;
  r.k_prime = tam.log().k_prime;
  r.mimic_matches = mimic_run.matches;
  // Integer forms of the bounds: 2 * matches >= 2 * n_hat - L1 and so on.
  r.lemma1_ok = 2 * r.mimic_matches >= 2 * r.n_hat - r.l1_counts;
  r.lemma2_ok = 2 * r.n_star <= 2 * r.n_hat + r.l1_counts;
  r.feasible_ok = r.matches <= r.n_star;
  if (r.n_star > 0) r.ratio = static_cast<double>(r.matches) / r.n_star;
  return r;
}

/// Heuristic adversary: draws `candidates` perturbations at `target_counts`
/// and keeps the one on which Mimic matches least over an arrival order of
/// its own, preferring larger n-hat on ties. One candidate is plain perturb.
inline TypeProfile worst_of_k_advice(const Instance& instance, int target_counts, int candidates,
                                     std::uint64_t seed) {
  require(candidates >= 1, "worst_of_k_advice: need at least one candidate");
  if (candidates == 1) return perturb(instance.truth(), target_counts, seed);
  Rng rng(derive_seed(seed, {0xADu}));
  const std::vector<int> order = random_permutation(instance.n(), rng);
  std::optional<TypeProfile> best;
  int best_matches = 0, best_n_hat = 0;
  for (int c = 0; c < candidates; ++c) {
    TypeProfile advice = perturb(instance.truth(), target_counts, derive_seed(seed, {static_cast<std::uint64_t>(c)}));
    Mimic mimic(advice);
    const int n_hat = mimic.plan().size;
    const int matches = run_online(mimic, instance, order).matches;
    if (!best || matches < best_matches || (matches == best_matches && n_hat > best_n_hat)) {
      best = std::move(advice);
      best_matches = matches;
      best_n_hat = n_hat;
    }
  }
  return std::move(*best);
}

/// As run_trial_with_advice, with advice perturbed from the truth to exactly
/// `target_counts` (worst of `adversary_k` candidates).
inline TrialRecord run_trial(const Instance& instance, const TamParams& params, int target_counts,
                             std::uint64_t seed, int adversary_k = 1) {
  const TrialSetup setup(seed, instance.n());
  return run_trial_with_advice(instance, worst_of_k_advice(instance, target_counts, adversary_k, setup.advice_seed),
                               params, seed);
}

/// Ranking alone on the same arrival order a trial with this seed uses.
inline int run_baseline_trial(const Instance& instance, std::uint64_t seed) {
  const TrialSetup setup(seed, instance.n());
  Rng rng(setup.algorithm_seed);
  Ranking ranking(instance.n(), rng);
  return run_online(ranking, instance, setup.order).matches;
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first
/// exception thrown by any call is rethrown after all workers stop.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------------------
// Cells and experiments
// ---------------------------------------------------------------------------

/// 1 - 2 L1 / (2 alpha + L1): guaranteed ratio (up to o(1)) in the small-error regime.
inline double smoothness_bound(double l1, double alpha) { return 1.0 - 2.0 * l1 / (2.0 * alpha + l1); }

struct CellSummary {
  double l1 = 0.0;
  int trials = 0;
  int excluded = 0;  ///< trials with n* = 0
  double mean_ratio = 0.0;
  double std_err = 0.0;
  double bound = 0.0;
  double freq_mimic_rest = 0.0;
  double freq_baseline_rest = 0.0;
  double freq_baseline_whole = 0.0;
  double mean_k_prime = 0.0;
};

inline CellSummary summarize(double l1, double alpha, const std::vector<TrialRecord>& records) {
  CellSummary s;
  s.l1 = l1;
  s.trials = static_cast<int>(records.size());
  s.bound = smoothness_bound(l1, alpha);
  double sum = 0.0, sum_sq = 0.0, k_prime = 0.0;
  int m = 0, mimic = 0, rest = 0, whole = 0;
  for (const auto& r : records) {
    k_prime += r.k_prime;
    mimic += r.branch == Phase::MimicRest;
    rest += r.branch == Phase::BaselineRest;
    whole += r.branch == Phase::BaselineWhole;
    if (!r.ratio) {
      ++s.excluded;
      continue;
    }
    sum += *r.ratio;
    sum_sq += *r.ratio * *r.ratio;
    ++m;
  }
  if (m > 0) s.mean_ratio = sum / m;
  if (m > 1) {
    const double var = std::max(0.0, (sum_sq - m * s.mean_ratio * s.mean_ratio) / (m - 1));
    s.std_err = std::sqrt(var / m);
  }
  if (!records.empty()) {
    const double t = static_cast<double>(records.size());
    s.freq_mimic_rest = mimic / t;
    s.freq_baseline_rest = rest / t;
    s.freq_baseline_whole = whole / t;
    s.mean_k_prime = k_prime / t;
  }
  return s;
}

struct CellResult {
  CellSummary summary;
  std::vector<TrialRecord> records;
};

struct ExperimentResult {
  std::vector<CellResult> cells;

  /// First trial that broke a per-trial inequality, if any.
  const TrialRecord* first_violation() const {
    for (const auto& c : cells) {
      for (const auto& r : c.records) {
        if (!r.ok()) return &r;
      }
    }
    return nullptr;
  }
};

inline Instance experiment_instance(const ExperimentSpec& spec) {
  return generate_instance(spec.family, spec.n, spec.family_params, derive_seed(spec.seed, {0x1257a11ce}));
}

inline CellResult run_cell(const Instance& instance, const ExperimentSpec& spec, std::size_t cell, int jobs = 1) {
  spec.validate();
  const double l1 = spec.error_grid.at(cell);
  const TamParams params = spec.tam_params();
  const int target = spec.target_counts(l1);
  CellResult out;
  out.records.resize(static_cast<std::size_t>(spec.trials));
  parallel_for(out.records.size(), jobs, [&](std::size_t t) {
    out.records[t] = run_trial(instance, params, target, trial_seed(spec.seed, cell, t), spec.adversary_k);
  });
  out.summary = summarize(l1, spec.alpha, out.records);
  return out;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs = 1) {
  spec.validate();
  const Instance instance = experiment_instance(spec);
  ExperimentResult result;
  for (std::size_t c = 0; c < spec.error_grid.size(); ++c) result.cells.push_back(run_cell(instance, spec, c, jobs));
  return result;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline std::string fmt_optional(const std::optional<double>& x) { return x ? fmt_double(*x) : std::string(); }

}  // namespace detail

inline void write_trials_csv(std::ostream& os, const ExperimentResult& result) {
  os << "seed,branch,matches,n_star,n_hat,l1_true,l1_hat,k,k_prime,ratio\n";
  for (const auto& cell : result.cells) {
    for (const auto& r : cell.records) {
      os << r.seed << ',' << to_string(r.branch) << ',' << r.matches << ',' << r.n_star << ',' << r.n_hat << ','
         << detail::fmt_double(r.l1_true) << ',' << detail::fmt_optional(r.l1_hat) << ',' << r.k << ','
         << r.k_prime << ',' << detail::fmt_optional(r.ratio) << '\n';
    }
  }
}

inline void write_summary_csv(std::ostream& os, const ExperimentResult& result) {
  os << "l1,mean_ratio,bound,std_err,trials,excluded,mimic_rest,baseline_rest,baseline_whole,mean_k_prime\n";
  for (const auto& cell : result.cells) {
    const auto& s = cell.summary;
    os << detail::fmt_double(s.l1) << ',' << detail::fmt_double(s.mean_ratio) << ',' << detail::fmt_double(s.bound)
       << ',' << detail::fmt_double(s.std_err) << ',' << s.trials << ',' << s.excluded << ','
       << detail::fmt_double(s.freq_mimic_rest) << ',' << detail::fmt_double(s.freq_baseline_rest) << ','
       << detail::fmt_double(s.freq_baseline_whole) << ',' << detail::fmt_double(s.mean_k_prime) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Smoothness and threshold algebra
// ---------------------------------------------------------------------------

/// tau = (2 n_hat / n) (1 - beta) / (1 + beta).
inline double switching_threshold(int n_hat, int n, double beta) {
  return 2.0 * n_hat / n * (1.0 - beta) / (1.0 + beta);
}

/// Worst-case Mimic ratio (n_hat - n L1 / 2) / (n_hat + n L1 / 2), written in
/// terms of the fraction x = n_hat / n.
inline double mimic_ratio_bound(double n_hat_fraction, double l1) {
  return (n_hat_fraction - l1 / 2.0) / (n_hat_fraction + l1 / 2.0);
}

struct SmoothnessRow {
  double l1 = 0.0;
  double mean_ratio = 0.0;
  double bound = 0.0;
  double std_err = 0.0;
};

/// Runs every grid point of `spec` and tabulates mean ratio against the
/// smoothness bound. The grid must lie in [0, tau - 2 epsilon] with tau taken
/// at n-hat = n*.
inline std::vector<SmoothnessRow> smoothness_curve(const ExperimentSpec& spec, int jobs = 1) {
  spec.validate();
  const Instance instance = experiment_instance(spec);
  const TamParams params = spec.tam_params();
  const double limit =
      switching_threshold(instance.opt_size(), instance.n(), spec.beta) - 2.0 * params.estimator.epsilon;
  for (double x : spec.error_grid) {
    require(x <= limit + 1e-12, "smoothness_curve: grid value above tau - 2 epsilon");
  }
  std::vector<SmoothnessRow> rows;
  for (std::size_t c = 0; c < spec.error_grid.size(); ++c) {
    const CellSummary s = run_cell(instance, spec, c, jobs).summary;
    rows.push_back({s.l1, s.mean_ratio, s.bound, s.std_err});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Remaining optimal matches after sampling
// ---------------------------------------------------------------------------

struct Lemma3Report {
  int trials = 0;
  int n_star = 0;
  std::int64_t k = 0;
  double mean_k_prime = 0.0;
  double mean_o2 = 0.0;
  int min_o2 = 0;
  double freq_slack_002 = 0.0;  ///< O2 >= (n-k)/n n* - 0.02 n*
  double freq_slack_005 = 0.0;  ///< O2 >= (n-k)/n n* - 0.05 n*
};

/// Samples k arrivals with replacement by the coin-flip scheme and counts the
/// vertices of a fixed maximum matching among the arrivals not yet consumed.
inline Lemma3Report check_lemma3(const Instance& instance, std::int64_t k, int trials, std::uint64_t seed) {
  const int n = instance.n();
  require(k >= 0 && k <= n, "check_lemma3: k must lie in [0, n]");
  require(trials >= 1, "check_lemma3: trials must be at least 1");
  const MatchingPlan plan = maximum_matching(instance.truth());
  const std::vector<int> type_of = instance.truth().expand();
  std::vector<char> in_opt(static_cast<std::size_t>(n), 0);
  {
    std::vector<std::size_t> seen(plan.partners.size(), 0);
    for (int v = 0; v < n; ++v) {
      const int t = type_of[v];
      if (seen[t]++ < plan.partners[t].size()) in_opt[v] = 1;
    }
  }
  const double expected = static_cast<double>(n - k) / n * plan.size;
  Lemma3Report rep;
  rep.trials = trials;
  rep.n_star = plan.size;
  rep.k = k;
  rep.min_o2 = n;
  int ok2 = 0, ok5 = 0;
  double o2_sum = 0.0, kp_sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    const std::vector<int> order = random_permutation(n, rng);
    int consumed = 0;
    for (std::int64_t drawn = 0; drawn < k; ++drawn) {
      if (consumed > 0 && rng.uniform() < static_cast<double>(consumed) / n) {
        rng.below(static_cast<std::uint64_t>(consumed));
      } else {
        ++consumed;
      }
    }
    int o2 = 0;
    for (int j = consumed; j < n; ++j) o2 += in_opt[order[j]];
    o2_sum += o2;
    kp_sum += consumed;
    rep.min_o2 = std::min(rep.min_o2, o2);
    ok2 += o2 >= expected - 0.02 * plan.size;
    ok5 += o2 >= expected - 0.05 * plan.size;
  }
  rep.mean_o2 = o2_sum / trials;
  rep.mean_k_prime = kp_sum / trials;
  rep.freq_slack_002 = static_cast<double>(ok2) / trials;
  rep.freq_slack_005 = static_cast<double>(ok5) / trials;
  return rep;
}

}  // namespace tamplus
