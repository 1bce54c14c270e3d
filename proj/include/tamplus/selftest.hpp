// Copyright 2026 The tamplus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tamplus/calibration.hpp"
#include "tamplus/graph.hpp"
#include "tamplus/harness.hpp"
#include "tamplus/predictions.hpp"
#include "tamplus/rng.hpp"

namespace tamplus {

/// Random profile on n offline vertices: each online vertex gets an
/// independent neighbor set with edge probability `density`.
inline TypeProfile random_profile(int n, double density, Rng& rng) {
  std::vector<TypeProfile::Entry> entries;
  for (int v = 0; v < n; ++v) {
    std::vector<int> nb;
    for (int u = 0; u < n; ++u) {
      if (rng.bernoulli(density)) nb.push_back(u);
    }
    entries.push_back({VertexType(std::move(nb)), 1});
  }
  return TypeProfile(n, std::move(entries));
}

struct ThresholdGridResult {
  double min_margin = INFINITY;     ///< min over the grid of ratio - beta
  double max_equality_error = 0.0;  ///< max |ratio - beta| at L1 = tau
  int points = 0;
};

/// Evaluates the worst-case Mimic ratio on n_hat/n in {0.01, ..., 1.00} and
/// L1 in {0, tau/100, ..., tau}.
inline ThresholdGridResult threshold_grid(double beta) {
  ThresholdGridResult out;
  for (int a = 1; a <= 100; ++a) {
    const double x = a / 100.0;
    const double tau = 2.0 * x * (1.0 - beta) / (1.0 + beta);
    for (int b = 0; b <= 100; ++b) {
      const double l1 = b == 100 ? tau : tau * b / 100.0;
      const double ratio = mimic_ratio_bound(x, l1);
      out.min_margin = std::min(out.min_margin, ratio - beta);
      if (b == 100) out.max_equality_error = std::max(out.max_equality_error, std::abs(ratio - beta));
      ++out.points;
    }
  }
  return out;
}

struct SelfTestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfTestOptions {
  bool quick = false;
  bool inject_fault = false;  ///< negative control: corrupts one oracle answer
  std::uint64_t seed = 1;
};

inline std::vector<SelfTestCheck> run_selftest(const SelfTestOptions& opt) {
  std::vector<SelfTestCheck> checks;
  Rng rng(opt.seed);

  {
    const int cases = opt.quick ? 200 : 1000;
    int mismatches = 0;
    for (int c = 0; c < cases; ++c) {
      const int n = 1 + static_cast<int>(rng.below(7));
      const TypeProfile p = random_profile(n, 0.1 + 0.6 * rng.uniform(), rng);
      const MatchingPlan plan = maximum_matching(p);
      check_plan(p, plan);
      int oracle = brute_force_matching(p);
      if (opt.inject_fault && c == 0) ++oracle;
      mismatches += plan.size != oracle;
    }
    checks.push_back({"maximum matching vs brute force", mismatches == 0,
                      std::to_string(mismatches) + " mismatches in " + std::to_string(cases) + " profiles"});
  }

  {
    const int cases = opt.quick ? 50 : 200;
    int bad = 0;
    for (int c = 0; c < cases; ++c) {
      const int n = 2 + static_cast<int>(rng.below(9));
      const TypeProfile a = random_profile(n, 0.4, rng);
      const TypeProfile b = perturb(a, 2 * static_cast<int>(rng.below(n + 1)), rng.next());
      const TypeProfile d = random_profile(n, 0.4, rng);
      const int ab = l1_counts(a, b), ba = l1_counts(b, a), ad = l1_counts(a, d), db = l1_counts(d, b);
      bad += ab != ba || l1_counts(a, a) != 0 || ab > ad + db || ab % 2 != 0 || (ab == 0) != (a == b);
    }
    checks.push_back({"l1 metric properties", bad == 0, std::to_string(bad) + " violations"});
  }

  {
    const int cases = opt.quick ? 30 : 100;
    int bad = 0;
    for (int c = 0; c < cases; ++c) {
      const int n = 1 + static_cast<int>(rng.below(40));
      const TypeProfile truth = random_profile(n, 0.2, rng);
      const int target = 2 * static_cast<int>(rng.below(n + 1));
      const TypeProfile advice = perturb(truth, target, rng.next());
      const PredictionPair pair(truth, advice);
      const int n_hat = maximum_matching(advice).size;
      bad += l1_counts(truth, advice) != target;
      bad += maximum_matching(truth).size > upper_bound_opt(pair, n_hat);
    }
    checks.push_back({"perturb exactness and opt upper bound", bad == 0, std::to_string(bad) + " violations"});
  }

  {
    const ThresholdGridResult g = threshold_grid(0.696);
    const bool ok = g.min_margin >= -1e-12 && g.max_equality_error <= 1e-12;
    checks.push_back({"threshold algebra grid", ok,
                      "min margin " + detail::fmt_double(g.min_margin) + ", equality error " +
                          detail::fmt_double(g.max_equality_error)});
  }

  {
    const TypeProfile truth = fidelity_profile();
    TamParams params;
    params.alpha = 1.0;
    params.estimator = {0.15, 0.1, truth.n(), 0.05};
    const SamplingFidelity f = sampling_fidelity(truth, params, opt.quick ? 1000 : 10000, rng.next());
    checks.push_back({"with-replacement sample frequencies", f.max_z() <= 3.0,
                      "max |z| = " + detail::fmt_double(f.max_z())});
  }
  return checks;
}

}  // namespace tamplus
