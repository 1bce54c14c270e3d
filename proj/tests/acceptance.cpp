// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tamplus/tamplus.hpp"

namespace {

using namespace tamplus;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Per-trial inequality counters shared by every sweep in the suite.
struct LemmaTally {
  long trials = 0;
  long lemma1_violations = 0;
  long lemma2_violations = 0;

  void add(const std::vector<TrialRecord>& records) {
    for (const auto& r : records) {
      ++trials;
      lemma1_violations += !r.lemma1_ok;
      lemma2_violations += !r.lemma2_ok;
    }
  }
};

ExperimentSpec base_spec(const std::string& family, int n, double alpha, double l1, int trials, std::uint64_t seed) {
  ExperimentSpec s;
  s.family = family;
  s.n = n;
  s.alpha = alpha;
  s.error_grid = {l1};
  s.trials = trials;
  s.seed = seed;
  return s;
}

// Mean of Ranking-alone ratios on the instance and seeds run_cell uses for cell 0.
std::vector<double> baseline_ratios(const Instance& instance, const ExperimentSpec& spec, int jobs) {
  std::vector<double> out(static_cast<std::size_t>(spec.trials));
  parallel_for(out.size(), jobs, [&](std::size_t t) {
    out[t] = static_cast<double>(run_baseline_trial(instance, trial_seed(spec.seed, 0, t))) / instance.opt_size();
  });
  return out;
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  Rng rng(20240601);
  int mismatches = 0;
  for (int c = 0; c < 1000; ++c) {
    const int n = 1 + static_cast<int>(rng.below(7));
    const TypeProfile p = random_profile(n, 0.1 + 0.6 * rng.uniform(), rng);
    const MatchingPlan plan = maximum_matching(p);
    check_plan(p, plan);
    mismatches += plan.size != brute_force_matching(p);
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {mismatches == 0 && secs < 10.0, fmt("%d mismatches in 1000 profiles (n <= 7), %.2f s", mismatches, secs)};
}

Outcome threshold_algebra() {
  const auto start = Clock::now();
  const ThresholdGridResult g = threshold_grid(0.696);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {g.min_margin >= -1e-12 && g.max_equality_error <= 1e-12 && secs < 1.0,
          fmt("%d points, min(ratio - beta) = %.3g, max |ratio - beta| at tau = %.3g, %.4f s", g.points,
              g.min_margin, g.max_equality_error, secs)};
}

Outcome estimator_contract(int jobs) {
  const auto start = Clock::now();
  const double c_sample = 4.0;
  const CalibrationReport rep = calibrate(1000, 0.1, 0.1, {c_sample}, 500, 5, jobs);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::string detail = fmt("c_sample %.1f:", c_sample);
  double worst = 1.0;
  for (const auto& r : rep.rows) {
    detail += fmt(" %s(L1 %.2f) %.3f", r.name.c_str(), r.l1_true, r.pass_rate);
    worst = std::min(worst, r.pass_rate);
  }
  detail += fmt(", %.1f s", secs);
  return {rep.rows.size() == 4 && worst >= 0.9 && secs < 300.0, detail};
}

Outcome consistency(int jobs, LemmaTally& tally) {
  const auto start = Clock::now();
  const ExperimentSpec spec = base_spec("perfect", 1000, 0.5, 0.0, 200, 601);
  const CellResult cell = run_cell(experiment_instance(spec), spec, 0, jobs);
  tally.add(cell.records);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const auto& s = cell.summary;
  return {s.mean_ratio >= 0.98 && s.freq_mimic_rest >= 0.9 && secs < 300.0,
          fmt("mean ratio %.4f, MimicRest %.3f, %.1f s", s.mean_ratio, s.freq_mimic_rest, secs)};
}

Outcome consistency_below_beta(int jobs, LemmaTally& tally) {
  ExperimentSpec spec = base_spec("isolated", 1000, 0.4, 0.0, 200, 701);
  spec.family_params.rho = 0.5;
  const Instance instance = experiment_instance(spec);
  const CellResult cell = run_cell(instance, spec, 0, jobs);
  tally.add(cell.records);
  const double baseline = mean(baseline_ratios(instance, spec, jobs));
  const auto& s = cell.summary;
  return {instance.opt_size() == 500 && s.mean_ratio >= 0.98,
          fmt("n* = %d, mean ratio %.4f (baseline alone %.4f), MimicRest %.3f", instance.opt_size(), s.mean_ratio,
              baseline, s.freq_mimic_rest)};
}

Outcome robustness(int jobs, LemmaTally& tally) {
  ExperimentSpec spec = base_spec("perfect", 1000, 0.5, 2.0, 200, 801);
  spec.adversary_k = 4;
  const Instance instance = experiment_instance(spec);
  const CellResult cell = run_cell(instance, spec, 0, jobs);
  tally.add(cell.records);
  const std::vector<double> baseline = baseline_ratios(instance, spec, jobs);
  // Per-trial (1 - k/n) with k the number of arrivals consumed by sampling,
  // clamped to [0, 1]; the nominal sample size exceeds n at this scale.
  double scaled = 0.0, k_mean = 0.0;
  for (std::size_t t = 0; t < baseline.size(); ++t) {
    const auto& r = cell.records[t];
    scaled += baseline[t] * std::clamp(1.0 - static_cast<double>(r.k_prime) / spec.n, 0.0, 1.0);
    k_mean += static_cast<double>(r.k);
  }
  scaled /= static_cast<double>(baseline.size());
  k_mean /= static_cast<double>(baseline.size());
  const auto& s = cell.summary;
  return {s.freq_baseline_rest >= 0.9 && s.mean_ratio >= scaled - 0.03,
          fmt("BaselineRest %.3f, mean ratio %.4f vs baseline %.4f x (1 - k'/n) = %.4f, mean k = %.0f, mean k' = %.1f",
              s.freq_baseline_rest, s.mean_ratio, mean(baseline), scaled, k_mean, s.mean_k_prime)};
}

Outcome smoothness(int jobs, LemmaTally& tally) {
  const auto start = Clock::now();
  ExperimentSpec spec = base_spec("perfect", 1000, 0.5, 0.0, 200, 901);
  const Instance instance = experiment_instance(spec);
  const double limit = switching_threshold(instance.opt_size(), spec.n, spec.beta) - 2.0 * spec.tam_params().estimator.epsilon;
  spec.error_grid.clear();
  for (int i = 0; 0.02 * i <= limit + 1e-12; ++i) spec.error_grid.push_back(0.02 * i);
  std::string detail;
  double worst = INFINITY;
  for (std::size_t c = 0; c < spec.error_grid.size(); ++c) {
    const CellResult cell = run_cell(instance, spec, c, jobs);
    tally.add(cell.records);
    const double margin = cell.summary.mean_ratio - (cell.summary.bound - 0.03);
    worst = std::min(worst, margin);
    detail += fmt(" %.2f:%.3f/%.3f", cell.summary.l1, cell.summary.mean_ratio, cell.summary.bound);
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {worst >= 0.0 && secs < 1800.0,
          fmt("%zu points up to %.3f, min margin %.4f, %.1f s; L1:mean/bound", spec.error_grid.size(), limit, worst,
              secs) + detail};
}

Outcome remaining_optimum() {
  const auto start = Clock::now();
  const Instance instance = generate_instance("perfect", 1000, {}, 1001);
  const Lemma3Report r = check_lemma3(instance, 100, 10000, 1002);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {r.freq_slack_002 >= 0.99 && secs < 120.0,
          fmt("freq(O2 >= 0.9 n* - 0.02 n*) = %.4f, min O2 %d, mean k' %.2f, %.1f s", r.freq_slack_002, r.min_o2,
              r.mean_k_prime, secs)};
}

Outcome overflow() {
  std::string detail;
  bool pass = true;
  for (int n : {100, 1000}) {
    const EstimatorConfig config{default_epsilon(0.5, 0.696), default_delta_prime(n), n, 4.0};
    Rng rng(derive_seed(1101, {static_cast<std::uint64_t>(n)}));
    int over = 0;
    for (int i = 0; i < 100000; ++i) over += draw_sample_size(config, rng).overflowed;
    const double freq = over / 1e5;
    pass = pass && freq <= 1e-3;
    detail += fmt("n=%d: %.5f (s = %lld) ", n, freq, static_cast<long long>(expected_sample_size(config)));
  }
  return {pass, detail};
}

Outcome fidelity() {
  const TypeProfile truth = fidelity_profile();
  TamParams params;
  params.alpha = 1.0;
  params.estimator = {0.15, 0.1, truth.n(), 0.05};
  const SamplingFidelity f = sampling_fidelity(truth, params, 10000, 1201);
  std::string detail = fmt("max z %.2f;", f.max_z());
  for (std::size_t t = 0; t < f.mean.size(); ++t) detail += fmt(" %.4f/%.4f", f.mean[t], f.expected[t]);
  return {f.max_z() <= 3.0, detail};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome reproducibility(int jobs) {
  ExperimentSpec spec = base_spec("perfect", 200, 0.5, 0.0, 20, 1301);
  spec.error_grid = {0.0, 0.1, 1.0, 2.0};
  const auto dir = std::filesystem::temp_directory_path() / "tamplus_acceptance_repro";
  std::filesystem::remove_all(dir);
  std::vector<std::string> files;
  for (int run = 0; run < 2; ++run) {
    const auto sub = dir / std::to_string(run);
    std::filesystem::create_directories(sub);
    const ExperimentResult result = run_experiment(spec, run == 0 ? 1 : jobs);
    {
      std::ofstream t(sub / "trials.csv", std::ios::binary), s(sub / "summary.csv", std::ios::binary);
      write_trials_csv(t, result);
      write_summary_csv(s, result);
    }
    files.push_back(slurp(sub / "trials.csv"));
    files.push_back(slurp(sub / "summary.csv"));
  }
  std::filesystem::remove_all(dir);
  const bool same = files[0] == files[2] && files[1] == files[3] && !files[0].empty();
  return {same, fmt("trials.csv %zu bytes, summary.csv %zu bytes, identical: %s", files[0].size(), files[1].size(),
                    same ? "yes" : "no")};
}

// Extra small-n sweep over the whole error range so the per-trial lemma
// checks cover at least 10^4 trials.
void lemma_sweep(int jobs, LemmaTally& tally) {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.1 * i);
  for (const char* family : {"perfect", "isolated", "triangular"}) {
    ExperimentSpec spec = base_spec(family, 100, 0.5, 0.0, 160, 1401);
    spec.error_grid = grid;
    tally.add([&] {
      std::vector<TrialRecord> all;
      for (auto& cell : run_experiment(spec, jobs).cells) {
        all.insert(all.end(), cell.records.begin(), cell.records.end());
      }
      return all;
    }());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  int jobs = default_jobs();
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << o.detail
              << fmt("  (%.1f s)", secs) << std::endl;
  };

  LemmaTally tally;
  report(1, "maximum matching agrees with brute force", oracle_equivalence);
  report(4, "threshold algebra", threshold_algebra);
  report(5, "estimator accuracy contract", [&] { return estimator_contract(jobs); });
  report(6, "consistency with perfect advice", [&] { return consistency(jobs, tally); });
  report(7, "consistency when n* < beta n", [&] { return consistency_below_beta(jobs, tally); });
  report(8, "robustness to disjoint advice", [&] { return robustness(jobs, tally); });
  report(9, "smoothness in the prediction error", [&] { return smoothness(jobs, tally); });
  report(10, "optimal matches left after sampling", remaining_optimum);
  report(11, "sample size overflow", overflow);
  report(12, "sampling with replacement fidelity", fidelity);
  report(13, "sweep reproducibility", [&] { return reproducibility(jobs); });
  lemma_sweep(jobs, tally);
  report(2, "Mimic lower bound on every trial", [&] {
    return Outcome{tally.trials >= 10000 && tally.lemma1_violations == 0,
                   fmt("%ld violations in %ld trials", tally.lemma1_violations, tally.trials)};
  });
  report(3, "optimum upper bound on every pair", [&] {
    return Outcome{tally.trials >= 10000 && tally.lemma2_violations == 0,
                   fmt("%ld violations in %ld trials", tally.lemma2_violations, tally.trials)};
  });

  std::cout << (failures == 0 ? "ALL PASS" : fmt("%d FAILED", failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
