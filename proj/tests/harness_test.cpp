// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "tamplus/harness.hpp"
#include "tamplus/selftest.hpp"

namespace tamplus {
namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.family = "perfect";
  s.n = 120;
  s.alpha = 0.5;
  s.error_grid = {0.0, 0.5, 2.0};
  s.trials = 12;
  s.seed = 7;
  return s;
}

TEST(FamilyTest, IsolatedHasRhoNMatchable) {
  const Instance inst = generate_instance("isolated", 100, {3, 0.5}, 1);
  EXPECT_EQ(inst.opt_size(), 50);
  EXPECT_EQ(inst.truth().count(VertexType{}), 50);
}

TEST(FamilyTest, PerfectAndTriangularArePerfect) {
  EXPECT_EQ(generate_instance("perfect", 100, {}, 2).opt_size(), 100);
  EXPECT_EQ(generate_instance("perfect", 100, {1, 0.5}, 2).opt_size(), 100);
  EXPECT_EQ(generate_instance("triangular", 4, {}, 0).opt_size(), 4);
  EXPECT_EQ(generate_instance("triangular", 4, {}, 0).truth()[3].type.degree(), 4);
}

TEST(FamilyTest, DegreeIsHonored) {
  const Instance inst = generate_instance("perfect", 50, {4, 0.5}, 3);
  for (const auto& e : inst.truth().entries()) EXPECT_EQ(e.type.degree(), 4);
}

TEST(FamilyTest, RejectsUnknownFamilyAndBadParams) {
  EXPECT_THROW(generate_instance("clique", 10, {}, 1), ValidationError);
  EXPECT_THROW(generate_instance("isolated", 10, {3, 1.5}, 1), ValidationError);
  EXPECT_THROW(generate_instance("perfect", 0, {}, 1), ValidationError);
}

TEST(SpecTest, TargetCountsAreEvenAndNearest) {
  ExperimentSpec s;
  s.n = 101;
  EXPECT_EQ(s.target_counts(0.0), 0);
  EXPECT_EQ(s.target_counts(2.0), 202);
  EXPECT_EQ(s.target_counts(0.1), 10);  // 10.1 -> 10
  for (double x = 0.0; x <= 2.0; x += 0.01) EXPECT_EQ(s.target_counts(x) % 2, 0);
}

TEST(SpecTest, JsonRoundTripAndDefaults) {
  ExperimentSpec s = small_spec();
  s.epsilon = 0.03;
  const nlohmann::json j = s;
  const ExperimentSpec back = j.get<ExperimentSpec>();
  EXPECT_EQ(back.n, s.n);
  EXPECT_EQ(back.error_grid, s.error_grid);
  EXPECT_EQ(back.epsilon, s.epsilon);
  EXPECT_EQ(back.adversary_k, 1);
  EXPECT_FALSE(back.delta_prime.has_value());
  EXPECT_DOUBLE_EQ(back.tam_params().estimator.delta_prime, 0.1);
  EXPECT_DOUBLE_EQ(small_spec().tam_params().estimator.epsilon, 0.05);
}

TEST(SpecTest, ValidationErrors) {
  ExperimentSpec s = small_spec();
  s.trials = 0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = small_spec();
  s.error_grid = {2.5};
  EXPECT_THROW(s.validate(), ValidationError);
  s = small_spec();
  s.error_grid.clear();
  EXPECT_THROW(s.validate(), ValidationError);
  EXPECT_THROW(nlohmann::json::parse(R"({"n": 10})").get<ExperimentSpec>(), ValidationError);
}

TEST(TrialTest, PerfectAdviceGivesOptimum) {
  const Instance inst = generate_instance("perfect", 200, {}, 5);
  ExperimentSpec s = small_spec();
  s.n = 200;
  const TrialRecord r = run_trial(inst, s.tam_params(), 0, 11);
  EXPECT_EQ(r.l1_counts, 0);
  EXPECT_EQ(r.branch, Phase::MimicRest);
  EXPECT_EQ(r.matches, 200);
  EXPECT_TRUE(r.ok());
  ASSERT_TRUE(r.ratio.has_value());
  EXPECT_DOUBLE_EQ(*r.ratio, 1.0);
}

TEST(TrialTest, MaximalErrorSwitchesToBaseline) {
  ExperimentSpec s = small_spec();
  s.n = 300;
  const Instance inst = experiment_instance(s);
  int rest = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TrialRecord r = run_trial(inst, s.tam_params(), 600, seed);
    EXPECT_EQ(r.l1_counts, 600);
    EXPECT_TRUE(r.ok());
    rest += r.branch == Phase::BaselineRest || r.branch == Phase::BaselineWhole;
  }
  EXPECT_EQ(rest, 20);
}

TEST(AdversaryTest, WorstOfKIsNoBetterForMimic) {
  const Instance inst = generate_instance("perfect", 200, {}, 4);
  const TypeProfile single = worst_of_k_advice(inst, 200, 1, 5);
  EXPECT_EQ(single, perturb(inst.truth(), 200, 5));
  const TypeProfile worst = worst_of_k_advice(inst, 200, 8, 5);
  EXPECT_EQ(l1_counts(inst.truth(), worst), 200);
  EXPECT_EQ(worst, worst_of_k_advice(inst, 200, 8, 5));
  Rng rng(derive_seed(5, {0xADu}));
  const auto order = random_permutation(200, rng);
  Mimic chosen(worst);
  const int chosen_matches = run_online(chosen, inst, order).matches;
  for (std::uint64_t c = 0; c < 8; ++c) {
    Mimic other(perturb(inst.truth(), 200, derive_seed(5, {c})));
    EXPECT_LE(chosen_matches, run_online(other, inst, order).matches);
  }
  EXPECT_THROW(worst_of_k_advice(inst, 200, 0, 5), ValidationError);
}

TEST(TrialTest, IsolatedInstancesExcludeNothingUnlessEmpty) {
  const Instance empty = generate_instance("isolated", 20, {3, 0.0}, 1);
  ExperimentSpec s;
  s.n = 20;
  const TrialRecord r = run_trial(empty, s.tam_params(), 0, 1);
  EXPECT_EQ(r.n_star, 0);
  EXPECT_FALSE(r.ratio.has_value());
  EXPECT_EQ(r.branch, Phase::BaselineWhole);
}

TEST(TrialTest, BaselineUsesSameOrder) {
  const Instance inst = generate_instance("triangular", 100, {}, 0);
  EXPECT_EQ(run_baseline_trial(inst, 3), run_baseline_trial(inst, 3));
}

TEST(CellTest, DeterministicAcrossJobCounts) {
  const ExperimentSpec s = small_spec();
  const Instance inst = experiment_instance(s);
  const CellResult a = run_cell(inst, s, 1, 1);
  const CellResult b = run_cell(inst, s, 1, 3);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].seed, b.records[i].seed);
    EXPECT_EQ(a.records[i].matches, b.records[i].matches);
    EXPECT_EQ(a.records[i].branch, b.records[i].branch);
  }
}

TEST(CellTest, SummaryMatchesRecords) {
  const ExperimentSpec s = small_spec();
  const CellResult c = run_cell(experiment_instance(s), s, 1, 2);
  double sum = 0.0;
  int mimic = 0;
  for (const auto& r : c.records) {
    sum += *r.ratio;
    mimic += r.branch == Phase::MimicRest;
  }
  EXPECT_NEAR(c.summary.mean_ratio, sum / s.trials, 1e-12);
  EXPECT_NEAR(c.summary.freq_mimic_rest, static_cast<double>(mimic) / s.trials, 1e-12);
  EXPECT_NEAR(c.summary.freq_mimic_rest + c.summary.freq_baseline_rest + c.summary.freq_baseline_whole, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(c.summary.bound, smoothness_bound(0.5, 0.5));
  EXPECT_EQ(c.summary.excluded, 0);
}

TEST(SummaryTest, StandardError) {
  std::vector<TrialRecord> rs(4);
  const double xs[] = {0.5, 0.75, 1.0, 0.75};
  for (int i = 0; i < 4; ++i) rs[i].ratio = xs[i];
  const CellSummary s = summarize(0.0, 0.5, rs);
  EXPECT_DOUBLE_EQ(s.mean_ratio, 0.75);
  // sample variance 0.125 / 3, se = sqrt(var / 4)
  EXPECT_NEAR(s.std_err, std::sqrt(0.125 / 3 / 4), 1e-15);
}

TEST(CsvTest, HeadersAndRowCounts) {
  const ExperimentSpec s = small_spec();
  const ExperimentResult r = run_experiment(s, 2);
  std::ostringstream trials, summary;
  write_trials_csv(trials, r);
  write_summary_csv(summary, r);
  const std::string t = trials.str(), m = summary.str();
  EXPECT_EQ(t.substr(0, t.find('\n')), "seed,branch,matches,n_star,n_hat,l1_true,l1_hat,k,k_prime,ratio");
  EXPECT_EQ(m.substr(0, m.find('\n')),
            "l1,mean_ratio,bound,std_err,trials,excluded,mimic_rest,baseline_rest,baseline_whole,mean_k_prime");
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 1 + 3 * s.trials);
  EXPECT_EQ(std::count(m.begin(), m.end(), '\n'), 4);
  EXPECT_EQ(r.first_violation(), nullptr);
}

TEST(SmoothnessTest, BoundValues) {
  EXPECT_DOUBLE_EQ(smoothness_bound(0.0, 0.5), 1.0);
  EXPECT_NEAR(smoothness_bound(0.1, 0.5), 0.81818181818181812, 1e-15);
  EXPECT_NEAR(mimic_ratio_bound(1.0, switching_threshold(100, 100, 0.696)), 0.696, 1e-12);
}

TEST(SmoothnessTest, ThresholdGridIsTightAtTau) {
  const ThresholdGridResult g = threshold_grid(0.696);
  EXPECT_EQ(g.points, 100 * 101);
  EXPECT_GE(g.min_margin, -1e-12);
  EXPECT_LE(g.max_equality_error, 1e-12);
}

TEST(SmoothnessTest, CurveRejectsGridAboveLimit) {
  ExperimentSpec s = small_spec();
  s.error_grid = {0.3};  // tau - 2 eps = 0.258 at n* = n
  EXPECT_THROW(smoothness_curve(s), ValidationError);
  s.error_grid = {0.0, 0.2};
  s.trials = 5;
  const auto rows = smoothness_curve(s);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[1].bound, smoothness_bound(0.2, 0.5));
}

TEST(Lemma3Test, ZeroSampleLeavesEverything) {
  const Instance inst = generate_instance("perfect", 200, {}, 9);
  const Lemma3Report r = check_lemma3(inst, 0, 20, 1);
  EXPECT_EQ(r.min_o2, 200);
  EXPECT_DOUBLE_EQ(r.mean_k_prime, 0.0);
  EXPECT_DOUBLE_EQ(r.freq_slack_002, 1.0);
}

TEST(Lemma3Test, ConsumedArrivalsBelowK) {
  const Instance inst = generate_instance("isolated", 400, {3, 0.5}, 9);
  const Lemma3Report r = check_lemma3(inst, 40, 500, 2);
  EXPECT_LE(r.mean_k_prime, 40.0);
  // E[k'] = n (1 - (1 - 1/n)^k)
  EXPECT_NEAR(r.mean_k_prime, 400 * (1 - std::pow(1 - 1.0 / 400, 40)), 0.5);
  EXPECT_GE(r.freq_slack_005, 0.95);
  EXPECT_THROW(check_lemma3(inst, 401, 1, 1), ValidationError);
}

TEST(ParallelForTest, RethrowsAndVisitsAll) {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  EXPECT_EQ(std::accumulate(hit.begin(), hit.end(), 0), 100);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 5) throw InvariantViolation("boom");
               }),
               InvariantViolation);
}

}  // namespace
}  // namespace tamplus
