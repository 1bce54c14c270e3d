// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Exit codes: 0 success, 1 invariant or contract
// failure, 2 usage or validation error. Machine-readable output goes to
// stdout, diagnostics to stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tamplus/tamplus.hpp"

namespace {

using namespace tamplus;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write " + path.string());
  return out;
}

struct RunOptions {
  std::string family = "perfect";
  std::optional<int> n;
  double l1 = 0.0;
  std::uint64_t seed = 1;
  double alpha = 0.5;
  double beta = 0.696;
  std::optional<double> epsilon;
  std::optional<double> delta_prime;
  double c_sample = 4.0;
  bool asymptotic_delta = false;
  int degree = 3;
  double rho = 0.5;
  int adversary_k = 1;
  std::string pair_path;
};

int cmd_run(const RunOptions& o) {
  require(o.l1 >= 0.0 && o.l1 <= 2.0, "--l1 must lie in [0, 2]");
  ExperimentSpec spec;
  spec.alpha = o.alpha;
  spec.beta = o.beta;
  spec.c_sample = o.c_sample;
  spec.epsilon = o.epsilon;
  spec.seed = o.seed;
  spec.family = o.family;
  spec.family_params = {o.degree, o.rho};
  spec.adversary_k = o.adversary_k;

  TrialRecord record;
  if (!o.pair_path.empty()) {
    const PredictionPair pair = prediction_pair_from_json(read_json(o.pair_path));
    spec.n = pair.n();
    spec.delta_prime = o.delta_prime ? o.delta_prime : std::optional(default_delta_prime(spec.n, o.asymptotic_delta));
    spec.validate();
    record = run_trial_with_advice(Instance(pair.truth), pair.advice, spec.tam_params(), o.seed);
  } else {
    require(o.n.has_value(), "--n is required unless --pair is given");
    spec.n = *o.n;
    spec.delta_prime = o.delta_prime ? o.delta_prime : std::optional(default_delta_prime(spec.n, o.asymptotic_delta));
    spec.error_grid = {o.l1};
    spec.validate();
    const Instance instance = experiment_instance(spec);
    record = run_trial(instance, spec.tam_params(), spec.target_counts(o.l1), o.seed, spec.adversary_k);
  }
  std::cout << nlohmann::json(record).dump() << '\n';
  if (!record.ok()) {
    std::cerr << "invariant violated on seed " << record.seed << '\n';
    return kFailure;
  }
  return kOk;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_dir, int jobs) {
  const ExperimentSpec spec = read_json(spec_path).get<ExperimentSpec>();
  spec.validate();
  std::filesystem::create_directories(out_dir);
  const auto trials_path = std::filesystem::path(out_dir) / "trials.csv";
  const auto summary_path = std::filesystem::path(out_dir) / "summary.csv";
  auto trials_out = open_output(trials_path);
  auto summary_out = open_output(summary_path);

  const ExperimentResult result = run_experiment(spec, jobs);
  write_trials_csv(trials_out, result);
  write_summary_csv(summary_out, result);

  const TrialRecord* bad = result.first_violation();
  nlohmann::json report = {{"trials_csv", trials_path.string()},
                           {"summary_csv", summary_path.string()},
                           {"violation_seed", bad ? nlohmann::json(bad->seed) : nlohmann::json(nullptr)}};
  std::cout << report.dump() << '\n';
  if (bad) {
    std::cerr << "per-trial invariant violated on seed " << bad->seed << " (lemma1 " << bad->lemma1_ok
              << ", lemma2 " << bad->lemma2_ok << ", feasible " << bad->feasible_ok << ")\n";
    return kFailure;
  }
  return kOk;
}

struct CalibrateOptions {
  int n = 1000;
  double epsilon = 0.1;
  double delta_prime = 0.1;
  int trials = 500;
  std::uint64_t seed = 1;
  std::vector<double> c_values{1, 2, 4, 8};
  std::string out;
};

int cmd_calibrate(const CalibrateOptions& o, int jobs) {
  std::optional<std::ofstream> out;
  if (!o.out.empty()) out = open_output(o.out);
  const CalibrationReport rep = calibrate(o.n, o.epsilon, o.delta_prime, o.c_values, o.trials, o.seed, jobs);
  const std::string text = nlohmann::json(rep).dump(2);
  std::cout << text << '\n';
  if (out) *out << text << '\n';
  for (const auto& r : rep.rows) {
    std::cerr << "c_sample " << r.c_sample << "  " << r.name << "  pass " << r.pass_rate << "  mean |err| "
              << r.mean_abs_error << '\n';
  }
  if (!rep.chosen) {
    std::cerr << "no c_sample met the accuracy contract\n";
    return kFailure;
  }
  return kOk;
}

int cmd_selftest(const SelfTestOptions& o) {
  const auto checks = run_selftest(o);
  auto arr = nlohmann::json::array();
  bool ok = true;
  for (const auto& c : checks) {
    ok = ok && c.passed;
    arr.push_back({{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    std::cerr << (c.passed ? "PASS  " : "FAIL  ") << c.name << ": " << c.detail << '\n';
  }
  std::cout << arr.dump() << '\n';
  return ok ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-augmented online bipartite matching simulator"};
  app.require_subcommand(1);
  int jobs = tamplus::default_jobs();
  app.add_option("--jobs", jobs, "Worker threads for trial batches")->check(CLI::PositiveNumber);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run one Test-and-Match+ trial and print its record as JSON");
  run_cmd->add_option("--family", run.family, "Instance family: perfect, isolated, triangular");
  run_cmd->add_option("--n", run.n, "Number of offline (and online) vertices");
  run_cmd->add_option("--l1", run.l1, "Target prediction error L1(p, q) in [0, 2]");
  run_cmd->add_option("--seed", run.seed, "Seed for instance, advice, arrival order and algorithm");
  run_cmd->add_option("--alpha", run.alpha, "Minimum predicted matching fraction");
  run_cmd->add_option("--beta", run.beta, "Baseline competitive ratio used in the threshold");
  run_cmd->add_option("--epsilon", run.epsilon, "Estimator accuracy");
  run_cmd->add_option("--delta-prime", run.delta_prime, "Estimator failure probability");
  run_cmd->add_option("--c-sample", run.c_sample, "Sample-size constant");
  run_cmd->add_flag("--asymptotic-delta", run.asymptotic_delta, "Use delta' = 1/ln ln ln n unclamped");
  run_cmd->add_option("--degree", run.degree, "Neighbors per matchable online vertex");
  run_cmd->add_option("--rho", run.rho, "Matchable fraction for the isolated family");
  run_cmd->add_option("--adversary-k", run.adversary_k, "Keep the most harmful of K random perturbations");
  run_cmd->add_option("--pair", run.pair_path, "Prediction pair JSON {\"truth\":..., \"advice\":...}");

  std::string spec_path, out_dir = ".";
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment spec and write trials.csv and summary.csv");
  sweep_cmd->add_option("--spec", spec_path, "Experiment spec JSON")->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory");

  CalibrateOptions cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Sweep c_sample against the estimator accuracy contract");
  cal_cmd->add_option("--n", cal.n, "Instance size");
  cal_cmd->add_option("--epsilon", cal.epsilon, "Accuracy");
  cal_cmd->add_option("--delta-prime", cal.delta_prime, "Allowed failure frequency");
  cal_cmd->add_option("--trials", cal.trials, "Trials per distribution and c_sample");
  cal_cmd->add_option("--seed", cal.seed, "Seed");
  cal_cmd->add_option("--c-values", cal.c_values, "Candidate c_sample values")->delimiter(',');
  cal_cmd->add_option("--out", cal.out, "Also write the report to this file");

  SelfTestOptions self;
  auto* self_cmd = app.add_subcommand("selftest", "Run the oracle cross-check suite");
  self_cmd->add_flag("--quick", self.quick, "Smaller case counts");
  self_cmd->add_flag("--inject-fault", self.inject_fault, "Corrupt one oracle answer (negative control)");
  self_cmd->add_option("--seed", self.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*sweep_cmd) return cmd_sweep(spec_path, out_dir, jobs);
    if (*cal_cmd) return cmd_calibrate(cal, jobs);
    if (*self_cmd) return cmd_selftest(self);
  } catch (const tamplus::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const tamplus::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
