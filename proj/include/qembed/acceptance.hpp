// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The qembed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The acceptance suite: fourteen numbered criteria, each with a pass/fail
// verdict and a one-line detail. Criterion 14 (independence from the job
// count) is checked by the caller, which runs the suite twice.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qembed/distances.hpp"
#include "qembed/ensembles.hpp"
#include "qembed/experiments.hpp"
#include "qembed/geometry.hpp"
#include "qembed/oracles.hpp"
#include "qembed/quantizer.hpp"
#include "qembed/random.hpp"
#include "qembed/report.hpp"

namespace qembed {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  /// runtime budget met (not part of `passed`, which must not depend on timing)
  bool within_budget = true;
  double budget_seconds = 0.0;
  double seconds = 0.0;
  std::string detail;
  std::optional<SlopeFit> fit;
};

struct AcceptanceRun {
  std::vector<CriterionResult> criteria;
  /// experiment results written alongside the summary
  std::vector<ExperimentResult> experiments;
  std::vector<SummaryRow> summary;

  bool all_passed() const {
    for (const auto& c : criteria)
      if (!c.passed || !c.within_budget) return false;
    return true;
  }
  std::string summary_csv() const {
    std::ostringstream os;
    write_summary_csv(os, summary);
    return os.str();
  }
};

namespace acceptance {

namespace detail {

inline std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

inline CriterionResult criterion(int id, std::string name) {
  CriterionResult c;
  c.id = id;
  c.name = std::move(name);
  return c;
}

struct Tuple {
  double a, b, t, s, delta;
};

inline std::vector<Tuple> soft_count_tuples(std::uint64_t seed, std::size_t n = 100000) {
  Rng rng(seed);
  constexpr double deltas[] = {0.1, 1.0, 2.0};
  std::vector<Tuple> out(n);
  for (auto& x : out) {
    x.a = -20.0 + 40.0 * rng.uniform();
    x.b = -20.0 + 40.0 * rng.uniform();
    x.t = -3.0 + 6.0 * rng.uniform();
    x.s = -3.0 + 6.0 * rng.uniform();
    x.delta = deltas[rng.index(3)];
  }
  return out;
}

}  // namespace detail

inline CriterionResult dithered_floor_identity(std::uint64_t seed, unsigned jobs) {
  auto c = detail::criterion(1, "dithered-floor identity");
  c.budget_seconds = 5.0;
  Rng rng(derive_seed(seed, {0}));
  std::size_t mc_fail = 0, oracle_fail = 0;
  double worst_z = 0.0, worst_oracle = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    const double x = -5.0 + 10.0 * rng.uniform();
    const double y = -5.0 + 10.0 * rng.uniform();
    const double target = std::abs(x - y);
    const Estimate e = dithered_floor_mean(x, y, 100000, derive_seed(seed, {1, i}), jobs);
    const double z = std::abs(e.mean - target) / e.std_error;
    worst_z = std::max(worst_z, z);
    if (!(std::abs(e.mean - target) <= 3.0 * e.std_error)) ++mc_fail;
    const double o = std::abs(oracle::dithered_floor_integral(x, y) - target);
    worst_oracle = std::max(worst_oracle, o);
    if (!(o <= 1e-12)) ++oracle_fail;
  }
  c.passed = mc_fail == 0 && oracle_fail == 0;
  c.detail = "20 pairs: max |mean-|x-y||/stderr=" + detail::fmt(worst_z, 3) +
             ", max oracle error=" + detail::fmt(worst_oracle, 3);
  return c;
}

inline CriterionResult soft_count_agreement(std::uint64_t seed) {
  auto c = detail::criterion(2, "soft-count closed form vs enumeration");
  c.budget_seconds = 10.0;
  std::size_t mismatches = 0;
  for (const auto& x : detail::soft_count_tuples(derive_seed(seed, {0}))) {
    for (double t : {x.t, x.s})
      if (soft_count_1d(x.a, x.b, t, x.delta) != oracle::soft_count_brute(x.a, x.b, t, x.delta))
        ++mismatches;
  }
  c.passed = mismatches == 0;
  c.detail = "1e5 tuples (t and s each): mismatches=" + std::to_string(mismatches);
  return c;
}

inline CriterionResult lemma1_bounds(std::uint64_t seed) {
  auto c = detail::criterion(3, "soft-distance bounds");
  std::size_t violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& x : detail::soft_count_tuples(derive_seed(seed, {0}))) {
    const auto v = lemma1_check(x.a, x.b, x.t, x.s, x.delta);
    if (!v.holds()) ++violations;
    worst = std::max({worst, v.lhs_ts / v.bound_ts, v.lhs_abs / v.bound_abs});
  }
  c.passed = violations == 0;
  c.detail = "1e5 tuples: violations=" + std::to_string(violations) +
             ", max lhs/bound=" + detail::fmt(worst, 4);
  return c;
}

inline CriterionResult sandwich_monotonicity(std::uint64_t seed, unsigned jobs) {
  auto c = detail::criterion(4, "sandwich and monotonicity of D^t");
  constexpr std::size_t kMaps = 1000;
  constexpr EnsembleKind kinds[] = {EnsembleKind::gaussian, EnsembleKind::rademacher,
                                    EnsembleKind::bounded_uniform};
  std::vector<char> bad(kMaps, 0);
  parallel_for(kMaps, jobs, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i, 0}));
    const Ensemble ens = Ensemble::make(kinds[i % 3]);
    const double delta = 0.25 + 1.75 * rng.uniform();
    const std::size_t m = 8 + rng.index(57), n = 2 + rng.index(15);
    const auto map = QuantizedMap::sample(ens, m, n, delta, derive_seed(seed, {i, 1}));
    Vector x(n), y(n);
    for (double& v : x) v = 3.0 * rng.normal();
    for (double& v : y) v = 3.0 * rng.normal();
    const double tau = 3.0 * rng.uniform();
    const auto rep = soft_distance_report(map, x, y, tau);
    bool ok = rep.sandwich_holds() && rep.lemma1_holds();
    double prev = std::numeric_limits<double>::infinity();
    for (int k = -8; k <= 8; ++k) {
      const double d = soft_pseudo_distance(map, x, y, 0.5 * k);
      ok = ok && d <= prev;
      prev = d;
    }
    bad[i] = ok ? 0 : 1;
  });
  std::size_t violations = 0;
  for (char b : bad) violations += b != 0 ? 1 : 0;
  c.passed = violations == 0;
  c.detail = "1e3 maps: violations=" + std::to_string(violations);
  return c;
}

inline CriterionResult expectation_identity(std::uint64_t seed, unsigned jobs) {
  auto c = detail::criterion(5, "expectation identity (Gaussian)");
  c.budget_seconds = 30.0;
  const Ensemble g = Ensemble::make(EnsembleKind::gaussian);
  Rng rng(derive_seed(seed, {0}));
  std::size_t fails = 0;
  double worst_z = 0.0;
  for (std::size_t p = 0; p < 10; ++p) {
    Vector x(8), y(8);
    for (double& v : x) v = rng.normal();
    for (double& v : y) v = rng.normal();
    const auto r = expectation_identity_check(g, x, y, 1.0, 16, 10000, derive_seed(seed, {1, p}), jobs);
    if (!r.holds) ++fails;
    worst_z = std::max(worst_z, std::abs(r.mean_d.mean - r.target) / r.mean_d.std_error);
  }
  c.passed = fails == 0;
  c.detail = "10 pairs x 1e4 maps (M=16, N=8): max z=" + detail::fmt(worst_z, 3);
  return c;
}

inline CriterionResult berry_esseen_envelope(std::uint64_t seed, unsigned jobs) {
  auto c = detail::criterion(6, "Berry-Esseen envelope (Rademacher)");
  const Ensemble r = Ensemble::make(EnsembleKind::rademacher);
  Rng rng(derive_seed(seed, {0}));
  std::size_t fails = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    Vector u(32);
    for (double& v : u) v = rng.normal();
    const Estimate mu = mu_sg(r, u, 100000, derive_seed(seed, {1, i}), jobs);
    const double gap = std::abs(mu.mean - kSqrt2OverPi * norm2(u));
    const double env = 47.0 * norm_inf(u);
    if (!(gap <= env + 3.0 * mu.std_error)) ++fails;
    worst = std::max(worst, gap / env);
  }
  c.passed = fails == 0;
  c.detail = "10 vectors (N=32): max gap/(47||u||_inf)=" + detail::fmt(worst, 3);
  return c;
}

inline CriterionResult bernoulli_floor(std::uint64_t seed, unsigned jobs) {
  auto c = detail::criterion(7, "Bernoulli distortion floor");
  std::size_t exceptions = 0;
  for (std::size_t m : {16u, 256u, 4096u})
    exceptions += section2_bernoulli_floor(m, 100, derive_seed(seed, {m}), EnsembleKind::rademacher, 4, jobs)
                      .exceptions;
  const auto contrast = section2_bernoulli_floor(256, 100, derive_seed(seed, {1}), EnsembleKind::gaussian, 4, jobs);
  const double floor = 1.0 - kSqrt2OverPi;
  c.passed = exceptions == 0 && floor > 0.202;
  c.detail = "300 maps: D != 1 in " + std::to_string(exceptions) + ", floor 1-sqrt(2/pi)=" +
             detail::fmt(floor, 6) + ", Gaussian mean D=" + detail::fmt(contrast.mean_d.mean, 4);
  return c;
}

inline CriterionResult no_dither(std::uint64_t seed, unsigned jobs) {
  auto c = detail::criterion(8, "undithered counterexample");
  const auto r = no_dither_counterexample(64, 0.4, 512, 1000, derive_seed(seed, {0}), jobs);
  c.passed = r.pass_rate == 1.0;
  c.detail = "1e3 maps: pass rate=" + detail::fmt(r.pass_rate, 6) +
             ", width=" + detail::fmt(r.irreducible_width, 6);
  return c;
}

inline CriterionResult combinatorics() {
  auto c = detail::criterion(9, "Stirling sandwich and binomial MAD gap");
  const auto st = stirling_gosper_check(10000);
  std::size_t gap_fail = 0, demoivre_fail = 0;
  double worst_diff = 0.0;
  for (std::size_t n = 2; n <= 60; n += 2) {
    const auto r = bernoulli_floor_distortion(n);
    if (n <= 40 && !r.holds) ++gap_fail;
    worst_diff = std::max(worst_diff, r.de_moivre_abs_diff);
    if (!(r.de_moivre_abs_diff <= 1e-12)) ++demoivre_fail;
  }
  c.passed = st.passed() && gap_fail == 0 && demoivre_fail == 0;
  c.detail = "Stirling n<=1e4 failures=" + std::to_string(st.failures.size()) +
             " (min lower margin " + detail::fmt(static_cast<double>(st.min_lower_margin), 3) +
             "); MAD gap failures=" + std::to_string(gap_fail) +
             "; max De Moivre diff=" + detail::fmt(worst_diff, 3);
  return c;
}

inline const std::vector<std::size_t>& decay_m_grid() {
  static const std::vector<std::size_t> grid{128, 256, 512, 1024, 2048, 4096, 8192};
  return grid;
}

inline TrialPlan structured_plan(std::uint64_t seed, unsigned jobs) {
  TrialPlan p;
  p.set = SparseBall{512, 4, 1.0, std::nullopt};
  p.ensemble = Ensemble::make(EnsembleKind::gaussian);
  p.delta = 0.5;
  p.m_grid = decay_m_grid();
  p.pairs_per_m = 200;
  p.trials_per_m = 20;
  p.k0 = 1.0;
  p.master_seed = seed;
  p.jobs = jobs;
  return p;
}

inline std::string fit_text(const ExperimentResult& r) {
  if (!r.fit) return "no fit (" + r.fit_error + ")";
  return "slope=" + detail::fmt(r.fit->slope, 4) + " +- " + detail::fmt(r.fit->std_error, 2) +
         " (" + std::to_string(r.fit->used) + " points, " + std::to_string(r.fit->censored) + " censored)";
}

inline CriterionResult quasi_isometry_decay(std::uint64_t seed, unsigned jobs, AcceptanceRun& run) {
  auto c = detail::criterion(10, "quasi-isometry decay, sparse vectors");
  auto r = quasi_isometry_sweep(structured_plan(derive_seed(seed, {0}), jobs));
  r.experiment = "quasi-isometry-structured";
  r.judge(-0.65, -0.35);
  c.passed = *r.verdict;
  c.fit = r.fit;
  c.detail = fit_text(r) + ", accepted range [-0.65, -0.35]";
  run.experiments.push_back(std::move(r));
  return c;
}

inline CriterionResult consistency_decay(std::uint64_t seed, unsigned jobs, AcceptanceRun& run) {
  auto c = detail::criterion(11, "consistency-width decay, sparse vectors");
  auto r = consistency_width_sweep(structured_plan(derive_seed(seed, {0}), jobs));
  r.experiment = "consistency-width-structured";
  r.judge(-1.25, -0.75);
  c.passed = *r.verdict;
  c.fit = r.fit;
  c.detail = fit_text(r) + ", accepted range [-1.25, -0.75]";

  TrialPlan g = structured_plan(derive_seed(seed, {1}), jobs);
  g.set = EuclideanBall{3, 1.0};
  auto rg = consistency_width_sweep(g);
  rg.experiment = "consistency-width-ball3";
  c.detail += "; unit ball in R^3 (reported only): " + fit_text(rg);
  run.experiments.push_back(std::move(r));
  run.experiments.push_back(std::move(rg));
  return c;
}

inline CriterionResult chernoff(std::uint64_t seed, unsigned jobs) {
  auto c = detail::criterion(12, "binomial tail bound on D^t");
  struct Config {
    double delta, dist, t;
  };
  constexpr Config configs[] = {{1.0, 0.5, 0.0}, {1.0, 1.0, 0.1}, {0.5, 0.3, 0.05},
                                {2.0, 1.5, 0.2}, {1.0, 0.5, 4.0}};
  const Ensemble g = Ensemble::make(EnsembleKind::gaussian);
  std::size_t fails = 0, skipped = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& cfg = configs[i];
    Rng rng(derive_seed(seed, {i, 0}));
    Vector u(16), w(16);
    for (double& v : u) v = rng.normal() / 4.0;
    for (double& v : w) v = rng.normal();
    const double nw = norm2(w);
    Vector v = u;
    for (std::size_t j = 0; j < 16; ++j) v[j] += cfg.dist * w[j] / nw;
    Lemma5Options opt;
    opt.jobs = jobs;
    opt.p_samples = 100000;
    const auto r = lemma5_chernoff_check(u, v, 1.0, cfg.t, g, cfg.delta, 64, 2000, derive_seed(seed, {i, 1}), opt);
    if (!r.chernoff_holds || !r.lower_bound_holds) ++fails;
    if (!r.p_lower_bound) ++skipped;
  }
  c.passed = fails == 0;
  c.detail = "5 configurations (M=64, N=16): failures=" + std::to_string(fails) +
             ", lower bound skipped (p_hat=0) in " + std::to_string(skipped);
  return c;
}

inline CriterionResult width_oracles(std::uint64_t seed, unsigned jobs) {
  auto c = detail::criterion(13, "mean-width oracles");
  Rng rng(derive_seed(seed, {0}));
  std::size_t sup_mismatch = 0;
  for (std::size_t n = 1; n <= 10; ++n)
    for (std::size_t k = 1; k <= n; ++k)
      for (int rep = 0; rep < 5; ++rep) {
        Vector g(n);
        for (double& v : g) v = rng.normal();
        if (sup_oracle(SparseBall{n, k, 1.0, std::nullopt}, g) != oracle::sparse_sup_brute(g, k))
          ++sup_mismatch;
      }
  const auto ball = width_estimate(EuclideanBall{2, 1.0}, 100000, derive_seed(seed, {1}), jobs);
  const double ball_target = std::sqrt(std::numbers::pi / 2.0);
  Vector u{0.6, -1.2, 0.3};
  const auto single = width_estimate(FiniteSet{{u}}, 100000, derive_seed(seed, {2}), jobs);
  const double single_target = kSqrt2OverPi * norm2(u);
  const bool ball_ok = std::abs(ball.mean - ball_target) <= 3.0 * ball.std_error;
  const bool single_ok = std::abs(single.mean - single_target) <= 3.0 * single.std_error;
  c.passed = sup_mismatch == 0 && ball_ok && single_ok;
  c.detail = "sparse sup mismatches=" + std::to_string(sup_mismatch) + "; w(B^2)=" +
             detail::fmt(ball.mean, 5) + " vs " + detail::fmt(ball_target, 5) + "; singleton " +
             detail::fmt(single.mean, 5) + " vs " + detail::fmt(single_target, 5);
  return c;
}

}  // namespace acceptance

/// Runs criteria 1 to 13. `progress`, when set, is called after each one.
inline AcceptanceRun run_acceptance(std::uint64_t seed, unsigned jobs,
                                    const std::function<void(const CriterionResult&)>& progress = {}) {
  AcceptanceRun run;
  auto timed = [&](auto&& f) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult c = f();
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.within_budget = c.budget_seconds <= 0.0 || c.seconds < c.budget_seconds;
    if (progress) progress(c);
    run.criteria.push_back(std::move(c));
  };
  using namespace acceptance;
  auto s = [seed](std::uint64_t id) { return derive_seed(seed, {id}); };
  timed([&] { return dithered_floor_identity(s(1), jobs); });
  timed([&] { return soft_count_agreement(s(2)); });
  timed([&] { return lemma1_bounds(s(2)); });
  timed([&] { return sandwich_monotonicity(s(4), jobs); });
  timed([&] { return expectation_identity(s(5), jobs); });
  timed([&] { return berry_esseen_envelope(s(6), jobs); });
  timed([&] { return bernoulli_floor(s(7), jobs); });
  timed([&] { return no_dither(s(8), jobs); });
  timed([&] { return combinatorics(); });
  timed([&] { return quasi_isometry_decay(s(10), jobs, run); });
  timed([&] { return consistency_decay(s(11), jobs, run); });
  timed([&] { return chernoff(s(12), jobs); });
  timed([&] { return width_oracles(s(13), jobs); });

  for (const auto& c : run.criteria) {
    SummaryRow row;
    row.experiment = "criterion-" + std::to_string(c.id);
    if (c.fit) {
      row.slope = c.fit->slope;
      row.std_error = c.fit->std_error;
    }
    row.verdict = c.passed ? "pass" : "fail";
    run.summary.push_back(row);
  }
  for (const auto& e : run.experiments) run.summary.push_back(summarize(e));
  return run;
}

}  // namespace qembed
