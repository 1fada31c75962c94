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

// Monte Carlo decay sweeps plus the exact counterexample and combinatorial
// checks.
//
// Every trial draws from derive_seed(master_seed, {m, trial, ...}), so a
// result depends only on the plan and its seed, never on the job count.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qembed/distances.hpp"
#include "qembed/ensembles.hpp"
#include "qembed/errors.hpp"
#include "qembed/geometry.hpp"
#include "qembed/parallel.hpp"
#include "qembed/quantizer.hpp"
#include "qembed/random.hpp"
#include "qembed/vector_ops.hpp"

namespace qembed {

// ---------------------------------------------------------------------------
// Log-log slope fitting

struct LogLogPoint {
  double m = 0.0;
  double statistic = 0.0;
  bool censored = false;
};

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
  std::size_t censored = 0;
};

/// Ordinary least squares of log(statistic) on log(m). Censored and
/// nonpositive points are excluded and counted.
inline SlopeFit fit_loglog_slope(std::span<const LogLogPoint> points) {
  std::vector<double> xs, ys;
  SlopeFit fit;
  for (const auto& p : points) {
    if (p.censored || !(p.statistic > 0.0) || !(p.m > 0.0)) {
      ++fit.censored;
      continue;
    }
    xs.push_back(std::log(p.m));
    ys.push_back(std::log(p.statistic));
  }
  const std::size_t n = xs.size();
  if (n < 3) throw insufficient_data("fit_loglog_slope: fewer than 3 usable points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw insufficient_data("fit_loglog_slope: all abscissae coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ssr += r * r;
  }
  fit.std_error = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  fit.used = n;
  return fit;
}

// ---------------------------------------------------------------------------
// Sweeps

struct TrialPlan {
  SetSpec set;
  Ensemble ensemble;
  double delta = 1.0;
  std::vector<std::size_t> m_grid;
  /// pairs per map (quasi-isometry) or anchor/direction probes per map
  /// (consistency width)
  std::size_t pairs_per_m = 1;
  /// independent maps per M
  std::size_t trials_per_m = 1;
  double k0 = 1.0;
  bool k0_filter = true;
  std::uint64_t master_seed = 0;
  unsigned jobs = 1;

  void validate() const {
    qembed::validate(set);
    if (!(delta > 0.0)) throw std::invalid_argument("TrialPlan: delta must be positive");
    if (m_grid.empty()) throw std::invalid_argument("TrialPlan: empty M grid");
    for (std::size_t i = 0; i < m_grid.size(); ++i) {
      if (m_grid[i] == 0) throw std::invalid_argument("TrialPlan: M must be >= 1");
      if (i > 0 && m_grid[i] <= m_grid[i - 1])
        throw std::invalid_argument("TrialPlan: M grid must be strictly increasing");
    }
    if (pairs_per_m == 0 || trials_per_m == 0)
      throw std::invalid_argument("TrialPlan: pairs and trials must be >= 1");
    if (!(k0 > 0.0)) throw std::invalid_argument("TrialPlan: k0 must be positive");
  }
};

/// One map (trial) at one M.
struct TrialRow {
  std::size_t m = 0;
  std::size_t trial = 0;
  double statistic = 0.0;
  bool censored = false;
  std::uint64_t seed = 0;
};

struct MStat {
  std::size_t m = 0;
  /// mean over maps of the per-map statistic; this is what gets fitted
  double statistic = 0.0;
  double max = 0.0;
  /// quantiles of the pooled per-pair (per-probe) values
  double q90 = 0.0;
  double q99 = 0.0;
  std::size_t censored_trials = 0;
  bool censored = false;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<MStat> per_m;
  std::vector<TrialRow> rows;
  std::optional<SlopeFit> fit;
  std::string fit_error;
  std::optional<bool> verdict;

  /// Sets `verdict` to whether the fitted slope lies in [lo, hi].
  void judge(double lo, double hi) {
    verdict = fit.has_value() && fit->slope >= lo && fit->slope <= hi;
  }
};

namespace detail {

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, v.size() - 1);
  return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
}

struct TrialOutcome {
  double statistic = 0.0;
  bool censored = false;
  std::vector<double> values;
};

/// Runs `trial(m, trial_index, seed)` for every (M, trial) and aggregates.
template <class Trial>
ExperimentResult run_sweep(const TrialPlan& plan, std::string name, Trial&& trial) {
  const std::size_t per = plan.trials_per_m;
  const std::size_t tasks = plan.m_grid.size() * per;
  std::vector<TrialOutcome> out(tasks);
  std::vector<std::uint64_t> seeds(tasks);
  parallel_for(tasks, plan.jobs, [&](std::size_t task) {
    const std::size_t m = plan.m_grid[task / per];
    const std::size_t t = task % per;
    seeds[task] = derive_seed(plan.master_seed, {m, t});
    out[task] = trial(m, t, seeds[task]);
  });
  ExperimentResult res;
  res.experiment = std::move(name);
  std::vector<LogLogPoint> points;
  for (std::size_t mi = 0; mi < plan.m_grid.size(); ++mi) {
    MStat st;
    st.m = plan.m_grid[mi];
    std::vector<double> pooled;
    MeanAccumulator mean;
    for (std::size_t t = 0; t < per; ++t) {
      const auto& o = out[mi * per + t];
      res.rows.push_back({st.m, t, o.statistic, o.censored, seeds[mi * per + t]});
      pooled.insert(pooled.end(), o.values.begin(), o.values.end());
      if (o.censored) {
        ++st.censored_trials;
        continue;
      }
      mean.add(o.statistic);
      st.max = std::max(st.max, o.statistic);
    }
    st.statistic = mean.count() > 0 ? mean.mean() : 0.0;
    st.censored = mean.count() == 0;
    st.q90 = quantile(pooled, 0.90);
    st.q99 = quantile(pooled, 0.99);
    points.push_back({static_cast<double>(st.m), st.statistic, st.censored});
    res.per_m.push_back(st);
  }
  try {
    res.fit = fit_loglog_slope(points);
  } catch (const insufficient_data& e) {
    res.fit_error = e.what();
  }
  return res;
}

/// Draws x, y from the set until x - y passes the anti-sparsity filter.
/// A zero difference always passes.
inline std::pair<Vector, Vector> filtered_pair(const TrialPlan& plan, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vector x = sample_point(plan.set, rng);
    Vector y = sample_point(plan.set, rng);
    const Vector w = difference(x, y);
    if (!plan.k0_filter || norm_inf(w) == 0.0 || anti_sparsity_level(w) >= plan.k0)
      return {std::move(x), std::move(y)};
  }
  throw incompatible_set("no sampled pair passes the anti-sparsity filter; lower k0 or change the set");
}

}  // namespace detail

/// e(x, y) = |D(x, y) - sqrt(2/pi) ||x - y|||.
inline double pair_distortion(const QuantizedMap& map, std::span<const double> x,
                              std::span<const double> y) {
  return std::abs(pseudo_distance(map, x, y) - kSqrt2OverPi * norm2(difference(x, y)));
}

/// Quasi-isometry decay. Per map the statistic is
///   max over pairs of e(x, y) / (||x - y|| + delta)  -  kappa_sg / sqrt(k0),
/// and per M the mean over maps is fitted against M on log-log axes.
/// A map whose statistic is not positive is censored.
inline ExperimentResult quasi_isometry_sweep(const TrialPlan& plan) {
  plan.validate();
  const std::size_t n = ambient_dim(plan.set);
  const double allowance =
      plan.ensemble.kind == EnsembleKind::gaussian ? 0.0 : plan.ensemble.kappa_sg / std::sqrt(plan.k0);
  return detail::run_sweep(plan, "quasi-isometry", [&](std::size_t m, std::size_t, std::uint64_t seed) {
    const auto map = QuantizedMap::sample(plan.ensemble, m, n, plan.delta, derive_seed(seed, {0}));
    Rng rng(derive_seed(seed, {1}));
    detail::TrialOutcome o;
    double worst = 0.0;
    for (std::size_t p = 0; p < plan.pairs_per_m; ++p) {
      const auto [x, y] = detail::filtered_pair(plan, rng);
      const double dist = norm2(difference(x, y));
      const double ratio = pair_distortion(map, x, y) / (dist + plan.delta);
      o.values.push_back(ratio);
      worst = std::max(worst, ratio);
    }
    o.statistic = worst - allowance;
    o.censored = !(o.statistic > 0.0);
    return o;
  });
}

/// A unit direction u such that x + r u stays in the set for
/// 0 <= r <= max_step, plus that max_step. Finite sets return the direction
/// to another point and the distance to it.
struct RayProbe {
  Vector direction;
  double max_step = 0.0;
  bool endpoint_only = false;
};

namespace detail {

inline double ball_exit(std::span<const double> x, std::span<const double> u, double radius) {
  const double xu = dot(x, u);
  const double xx = dot(x, x);
  return -xu + std::sqrt(std::max(0.0, xu * xu - xx + radius * radius));
}

inline void normalize(Vector& v) {
  const double n = norm2(v);
  for (double& e : v) e /= n;
}

}  // namespace detail

inline RayProbe admissible_direction(const SetSpec& set, std::span<const double> x, Rng& rng) {
  return std::visit(
      overloaded{
          [&](const FiniteSet& s) {
            RayProbe p;
            p.endpoint_only = true;
            for (int attempt = 0; attempt < 64 && p.max_step == 0.0; ++attempt) {
              const auto& q = s.points[rng.index(s.points.size())];
              p.direction = difference(q, x);
              p.max_step = norm2(p.direction);
            }
            if (p.max_step > 0.0)
              for (double& e : p.direction) e /= p.max_step;
            return p;
          },
          [&](const SparseBall& s) {
            const Vector z = s.basis ? s.basis->analyze(x) : Vector(x.begin(), x.end());
            std::vector<bool> on(s.n, false);
            std::size_t count = 0;
            for (std::size_t j = 0; j < s.n; ++j)
              if (z[j] != 0.0 && count < s.k) {
                on[j] = true;
                ++count;
              }
            while (count < s.k) {
              const std::size_t j = rng.index(s.n);
              if (!on[j]) {
                on[j] = true;
                ++count;
              }
            }
            Vector dz(s.n, 0.0);
            double nz = 0.0;
            while (nz == 0.0) {
              for (std::size_t j = 0; j < s.n; ++j) dz[j] = on[j] ? rng.normal() : 0.0;
              nz = norm2(dz);
            }
            for (double& e : dz) e /= nz;
            RayProbe p;
            p.direction = s.basis ? s.basis->synthesize(dz) : dz;
            p.max_step = detail::ball_exit(x, p.direction, s.radius);
            return p;
          },
          [&](const LowRankBall& s) {
            // x (I + r B) keeps the rank of x; from the origin use a random
            // rank-r direction.
            Vector u(s.rows * s.cols, 0.0);
            if (norm_inf(x) == 0.0) {
              u = sample_point(LowRankBall{s.rows, s.cols, s.rank, 1.0}, rng);
            } else {
              std::vector<double> b(s.cols * s.cols);
              for (double& e : b) e = rng.normal();
              for (std::size_t i = 0; i < s.rows; ++i)
                for (std::size_t j = 0; j < s.cols; ++j) {
                  double acc = 0.0;
                  for (std::size_t l = 0; l < s.cols; ++l) acc += x[i * s.cols + l] * b[l * s.cols + j];
                  u[i * s.cols + j] = acc;
                }
            }
            if (norm_inf(u) == 0.0) u = sample_point(LowRankBall{s.rows, s.cols, s.rank, 1.0}, rng);
            detail::normalize(u);
            return RayProbe{u, detail::ball_exit(x, u, s.radius), false};
          },
          [&](const EuclideanBall& s) {
            Vector u(s.n);
            double nu = 0.0;
            while (nu == 0.0) {
              for (double& e : u) e = rng.normal();
              nu = norm2(u);
            }
            for (double& e : u) e /= nu;
            return RayProbe{u, detail::ball_exit(x, u, s.radius), false};
          },
      },
      set);
}

struct RayWidth {
  double width = 0.0;
  /// consistent all the way to the edge of the set
  bool reached_boundary = false;
};

/// Largest r found with A(x + r u) = A(x): a coarse scan of `coarse` equally
/// spaced radii locates the first inconsistent one, then bisection shrinks
/// the bracket to `resolution`. Along a ray every coordinate of the code is
/// monotone in r, so the consistent radii form an interval and the result is
/// the exit radius up to `resolution`. The quantizer input at radius r is
/// evaluated as (Phi x + xi) + r Phi u.
inline RayWidth consistent_radius(const QuantizedMap& map, std::span<const double> x,
                                  std::span<const double> u, double max_step, double resolution,
                                  std::size_t coarse = 64) {
  const auto origin = map.project(x);
  const auto slope = map.project_linear(u);
  std::vector<std::int64_t> base(origin.size());
  for (std::size_t i = 0; i < origin.size(); ++i) base[i] = quantize(map.quantizer(), origin[i]);
  auto consistent = [&](double r) {
    for (std::size_t i = 0; i < origin.size(); ++i)
      if (quantize(map.quantizer(), origin[i] + r * slope[i]) != base[i]) return false;
    return true;
  };
  double lo = 0.0, hi = -1.0;
  for (std::size_t j = 1; j <= coarse; ++j) {
    const double r = max_step * static_cast<double>(j) / static_cast<double>(coarse);
    if (!consistent(r)) {
      hi = r;
      break;
    }
    lo = r;
  }
  if (hi < 0.0) return {max_step, true};
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (consistent(mid) ? lo : hi) = mid;
  }
  return {lo, false};
}

struct ConsistencyOptions {
  std::size_t coarse_radii = 64;
  /// bisection resolution as a fraction of ||K||
  double resolution_fraction = 0x1.0p-20;
};

/// Consistency-width decay. Per map the statistic is the largest consistent
/// ray length over `pairs_per_m` (anchor, admissible direction) probes; it is
/// censored when it does not exceed the bisection resolution. This is a
/// lower-bound estimator of the width sup{||x - y|| : A(x) = A(y)}.
inline ExperimentResult consistency_width_sweep(const TrialPlan& plan,
                                                const ConsistencyOptions& opt = {}) {
  plan.validate();
  const double radius = diameter(plan.set);
  if (radius > 1.0 + 1e-12)
    throw std::invalid_argument("consistency_width_sweep: the set must lie in the unit ball");
  const std::size_t n = ambient_dim(plan.set);
  const double resolution = opt.resolution_fraction * radius;
  return detail::run_sweep(plan, "consistency-width", [&](std::size_t m, std::size_t, std::uint64_t seed) {
    const auto map = QuantizedMap::sample(plan.ensemble, m, n, plan.delta, derive_seed(seed, {0}));
    Rng rng(derive_seed(seed, {1}));
    detail::TrialOutcome o;
    double widest = 0.0;
    for (std::size_t p = 0; p < plan.pairs_per_m; ++p) {
      const Vector x = sample_point(plan.set, rng);
      RayProbe probe;
      bool ok = false;
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        probe = admissible_direction(plan.set, x, rng);
        ok = probe.max_step > 0.0 &&
             (!plan.k0_filter || anti_sparsity_level(probe.direction) >= plan.k0);
      }
      if (!ok) throw incompatible_set("no admissible direction passes the anti-sparsity filter");
      double w = 0.0;
      if (probe.endpoint_only) {
        Vector y = x;
        for (std::size_t j = 0; j < n; ++j) y[j] += probe.max_step * probe.direction[j];
        w = map.apply(x) == map.apply(y) ? probe.max_step : 0.0;
      } else {
        w = consistent_radius(map, x, probe.direction, probe.max_step, resolution, opt.coarse_radii).width;
      }
      o.values.push_back(w);
      widest = std::max(widest, w);
    }
    o.statistic = widest;
    o.censored = widest <= resolution;
    return o;
  });
}

// ---------------------------------------------------------------------------
// Concentration checks

/// Diameter stability: for every sampled x in the local set (K - K) cap eta B,
/// ||Phi x|| <= factor * sqrt(M) * eta. `factor` absorbs the unspecified
/// constant of the statement.
inline bool diameter_stability_holds(const SensingMatrix& phi, std::span<const Vector> points,
                                     double eta, double factor) {
  const double limit = factor * std::sqrt(static_cast<double>(phi.rows)) * eta;
  for (const auto& x : points) {
    double s = 0.0;
    for (std::size_t i = 0; i < phi.rows; ++i) {
      const double v = dot(phi.row(i), x);
      s += v * v;
    }
    if (std::sqrt(s) > limit) return false;
  }
  return true;
}

struct Lemma4Report {
  std::size_t trials = 0;
  std::size_t failures = 0;
  double failure_rate = 0.0;
  double factor = 2.0;
  std::vector<bool> passed;  ///< per trial
};

/// Per trial: a fresh Phi and `points_per_trial` points of the local set,
/// each built as eta * U * (x - y)/||x - y|| from x, y in K (valid for the
/// star-shaped built-in balls). Directions and U do not depend on eta.
inline Lemma4Report lemma4_diameter_check(const SetSpec& set, double eta, const Ensemble& ensemble,
                                          std::size_t m, std::size_t trials, std::uint64_t seed,
                                          std::size_t points_per_trial = 64, double factor = 2.0,
                                          unsigned jobs = 1) {
  validate(set);
  if (!(eta > 0.0)) throw std::invalid_argument("lemma4_diameter_check: eta must be positive");
  const std::size_t n = ambient_dim(set);
  Lemma4Report r;
  r.trials = trials;
  r.factor = factor;
  std::vector<char> ok(trials, 0);
  parallel_for(trials, jobs, [&](std::size_t t) {
    const auto phi = sample_matrix(ensemble, m, n, derive_seed(seed, {t, 0}));
    Rng rng(derive_seed(seed, {t, 1}));
    std::vector<Vector> pts;
    for (std::size_t q = 0; q < points_per_trial; ++q) {
      Vector w = difference(sample_point(set, rng), sample_point(set, rng));
      const double nw = norm2(w);
      const double scale = nw > 0.0 ? eta * rng.uniform() / nw : 0.0;
      for (double& e : w) e *= scale;
      pts.push_back(std::move(w));
    }
    ok[t] = diameter_stability_holds(phi, pts, eta, factor) ? 1 : 0;
  });
  for (char c : ok) {
    r.passed.push_back(c != 0);
    if (c == 0) ++r.failures;
  }
  r.failure_rate = trials > 0 ? static_cast<double>(r.failures) / static_cast<double>(trials) : 0.0;
  return r;
}

struct Lemma5Options {
  std::optional<std::size_t> r;   ///< defaults to ceil(M p_hat / 2)
  std::optional<double> eps0;     ///< defaults to ||u - v||
  std::size_t p_samples = 200000;
  unsigned jobs = 1;
};

struct Lemma5Report {
  Estimate p_hat;
  std::size_t r = 0;
  bool vacuous = false;  ///< r > M p_hat
  Estimate left;         ///< P[D^t(u, v) <= delta r / M]
  double chernoff_bound = 1.0;
  bool chernoff_holds = false;
  std::optional<double> p_lower_bound;
  bool lower_bound_holds = true;
  std::string lower_bound_skipped;
};

/// Binomial-tail bound on the softened distance of a fixed pair and the
/// lower bound on the per-measurement separation probability p.
inline Lemma5Report lemma5_chernoff_check(std::span<const double> u, std::span<const double> v,
                                          double k0, double t, const Ensemble& ensemble,
                                          double delta, std::size_t m, std::size_t trials,
                                          std::uint64_t seed, const Lemma5Options& opt = {}) {
  if (u.size() != v.size()) throw std::invalid_argument("lemma5_chernoff_check: dimension mismatch");
  if (!(t >= 0.0)) throw std::invalid_argument("lemma5_chernoff_check: t must be nonnegative");
  if (!(delta > 0.0) || m == 0 || trials == 0)
    throw std::invalid_argument("lemma5_chernoff_check: need delta > 0, M >= 1, trials >= 1");
  const Vector w = difference(u, v);
  const double dist = norm2(w);
  if (dist > 0.0 && anti_sparsity_level(w) < k0)
    throw precondition_failed("lemma5_chernoff_check: u - v is not anti-sparse at level k0");
  const std::size_t n = u.size();
  Lemma5Report rep;
  rep.p_hat = monte_carlo(opt.p_samples, derive_seed(seed, {0}), opt.jobs, [&](Rng& rng) {
    double pu = 0.0, pv = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double phi = draw(ensemble.kind, rng);
      pu += phi * u[j];
      pv += phi * v[j];
    }
    const double xi = delta * rng.uniform();
    return soft_count_1d(pu + xi, pv + xi, t, delta) != 0 ? 1.0 : 0.0;
  });
  const double mp = static_cast<double>(m) * rep.p_hat.mean;
  rep.r = opt.r.value_or(static_cast<std::size_t>(std::ceil(mp / 2.0)));
  rep.vacuous = static_cast<double>(rep.r) > mp;
  std::vector<char> hit(trials, 0);
  parallel_for(trials, opt.jobs, [&](std::size_t i) {
    const auto map = QuantizedMap::sample(ensemble, m, n, delta, derive_seed(seed, {1, i}));
    const auto tc = threshold_count(map, u, v, t);
    std::int64_t total = 0;
    for (auto c : tc.per_coordinate) total += c;
    hit[i] = total <= static_cast<std::int64_t>(rep.r) ? 1 : 0;
  });
  MeanAccumulator left;
  for (char h : hit) left.add(h);
  rep.left = left.estimate();
  rep.chernoff_bound =
      mp > 0.0 ? std::exp(-(mp - static_cast<double>(rep.r)) * (mp - static_cast<double>(rep.r)) / (2.0 * mp))
               : 1.0;
  rep.chernoff_holds = rep.left.mean <= rep.chernoff_bound + 3.0 * rep.left.std_error;

  const bool applies = ensemble.kind == EnsembleKind::gaussian ||
                       std::sqrt(k0) >= 16.0 * ensemble.kappa_sg;
  if (!applies) {
    rep.lower_bound_skipped = "sqrt(k0) < 16 kappa_sg";
  } else if (rep.p_hat.mean == 0.0) {
    rep.lower_bound_skipped = "p_hat = 0";
  } else {
    const double eps0 = opt.eps0.value_or(dist);
    const double lb = dist / (16.0 * (delta + eps0)) - 2.0 * t / (delta + eps0);
    rep.p_lower_bound = lb;
    rep.lower_bound_holds = rep.p_hat.mean + 3.0 * rep.p_hat.std_error >= lb;
  }
  return rep;
}

/// Mean of the per-coordinate d^t against mu_sg(x - y) for a grid of t.
struct Lemma2Report {
  Estimate mu;
  std::vector<double> t;
  std::vector<Estimate> mean_dt;
  /// max over t != 0 of |mean d^t - mu| / |t|
  double fitted_c = 0.0;
};

inline Lemma2Report lemma2_expectation(const Ensemble& ensemble, std::span<const double> x,
                                       std::span<const double> y, double delta,
                                       std::span<const double> t_grid, std::size_t samples,
                                       std::uint64_t seed, unsigned jobs = 1) {
  const Vector w = difference(x, y);
  Lemma2Report rep;
  rep.mu = mu_sg(ensemble, w, samples, derive_seed(seed, {0}), jobs);
  for (double t : t_grid) {
    // common random numbers across t
    const Estimate e = monte_carlo(samples, derive_seed(seed, {1}), jobs, [&](Rng& rng) {
      double px = 0.0, py = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double phi = draw(ensemble.kind, rng);
        px += phi * x[j];
        py += phi * y[j];
      }
      const double xi = delta * rng.uniform();
      return soft_distance_1d(px + xi, py + xi, t, delta);
    });
    rep.t.push_back(t);
    rep.mean_dt.push_back(e);
    if (t != 0.0) rep.fitted_c = std::max(rep.fitted_c, std::abs(e.mean - rep.mu.mean) / std::abs(t));
  }
  return rep;
}

/// E D(x, y) over fresh (Phi, xi) against sqrt(2/pi) ||x - y||. For
/// non-Gaussian ensembles the allowed gap is kappa_sg / sqrt(K0) ||x - y||
/// with K0 the anti-sparsity level of x - y.
struct ExpectationReport {
  Estimate mean_d;
  double target = 0.0;
  double allowance = 0.0;
  bool holds = false;
};

inline ExpectationReport expectation_identity_check(const Ensemble& ensemble,
                                                    std::span<const double> x,
                                                    std::span<const double> y, double delta,
                                                    std::size_t m, std::size_t trials,
                                                    std::uint64_t seed, unsigned jobs = 1) {
  const Vector w = difference(x, y);
  const double dist = norm2(w);
  std::vector<double> d(trials);
  parallel_for(trials, jobs, [&](std::size_t i) {
    const auto map = QuantizedMap::sample(ensemble, m, x.size(), delta, derive_seed(seed, {i}));
    d[i] = pseudo_distance(map, x, y);
  });
  MeanAccumulator acc;
  for (double v : d) acc.add(v);
  ExpectationReport rep;
  rep.mean_d = acc.estimate();
  rep.target = kSqrt2OverPi * dist;
  if (dist > 0.0 && ensemble.kind != EnsembleKind::gaussian)
    rep.allowance = ensemble.kappa_sg / std::sqrt(anti_sparsity_level(w)) * dist;
  rep.holds = std::abs(rep.mean_d.mean - rep.target) <= rep.allowance + 3.0 * rep.mean_d.std_error;
  return rep;
}

// ---------------------------------------------------------------------------
// Counterexamples and combinatorics

struct CounterexampleReport {
  std::size_t trials = 0;
  std::size_t consistent = 0;
  double pass_rate = 0.0;
  /// ||u - v|| = s / sqrt(k0), a consistency width no M can remove
  double irreducible_width = 0.0;
};

/// Undithered rounding map with Bernoulli Phi and delta = 1: u = 1 on the
/// first k0 coordinates, v = (1 + s/k0) u. Phi u is an integer vector and the
/// perturbation moves each coordinate by at most s < 1/2, so A(u) = A(v).
inline CounterexampleReport no_dither_counterexample(std::size_t k0, double s, std::size_t m,
                                                     std::size_t trials, std::uint64_t seed,
                                                     unsigned jobs = 1) {
  if (k0 == 0) throw std::invalid_argument("no_dither_counterexample: k0 must be >= 1");
  if (!(s > 0.0 && s < 0.5)) throw std::invalid_argument("no_dither_counterexample: s must lie in (0, 1/2)");
  if (m == 0) throw std::invalid_argument("no_dither_counterexample: M must be >= 1");
  const Ensemble bern = Ensemble::make(EnsembleKind::rademacher);
  const Vector u(k0, 1.0);
  const Vector v(k0, 1.0 + s / static_cast<double>(k0));
  std::vector<char> same(trials, 0);
  parallel_for(trials, jobs, [&](std::size_t i) {
    const QuantizedMap map(sample_matrix(bern, m, k0, derive_seed(seed, {i})), std::nullopt,
                           {1.0, QuantizerVariant::round});
    same[i] = map.apply(u) == map.apply(v) ? 1 : 0;
  });
  CounterexampleReport r;
  r.trials = trials;
  for (char c : same) r.consistent += c != 0 ? 1 : 0;
  r.pass_rate = trials > 0 ? static_cast<double>(r.consistent) / static_cast<double>(trials) : 0.0;
  r.irreducible_width = norm2(difference(u, v));
  return r;
}

/// M_{2n} = n 2^{-2n} C(2n, n), evaluated as n * prod_{i<=n} (2i-1)/(2i).
inline double de_moivre_mad(std::size_t two_n) {
  if (two_n == 0 || two_n % 2 != 0) throw std::invalid_argument("de_moivre_mad: needs an even n >= 2");
  const std::size_t n = two_n / 2;
  long double prod = 1.0L;
  for (std::size_t i = 1; i <= n; ++i)
    prod *= static_cast<long double>(2 * i - 1) / static_cast<long double>(2 * i);
  return static_cast<double>(static_cast<long double>(n) * prod);
}

/// Irreducible Bernoulli distortion for w = ones(k0), delta = 1.
struct BinomialMadReport {
  std::size_t n = 0;
  double mad = 0.0;    ///< M_n = E|beta - n/2|, beta ~ Bin(n, 1/2), by enumeration
  double mu = 0.0;     ///< E D = E|sum phi_j| = 2 M_n
  double sigma = 0.0;  ///< sqrt(n)/2
  double gap = 0.0;    ///< sqrt(2/pi) sigma - M_n
  double bound = 0.0;  ///< sigma / (7 n)
  bool holds = false;
  double de_moivre = 0.0;
  double de_moivre_abs_diff = 0.0;
  /// |E D - sqrt(2/pi) ||w||| against C ||w|| / n, C = 1/7
  double consequence_lhs = 0.0;
  double consequence_rhs = 0.0;
  bool consequence_holds = false;
  /// the same with the constant doubled (2C ||w|| / n); reported only
  double doubled_rhs = 0.0;
  bool doubled_holds = false;
};

inline BinomialMadReport bernoulli_floor_distortion(std::size_t k0_even) {
  if (k0_even < 2 || k0_even % 2 != 0)
    throw std::invalid_argument("bernoulli_floor_distortion: k0 must be even and >= 2");
  constexpr double kC = 1.0 / 7.0;
  BinomialMadReport r;
  r.n = k0_even;
  const double n = static_cast<double>(k0_even);
  r.mu = mu_sg_exact_binomial(k0_even);
  r.mad = r.mu / 2.0;
  r.sigma = std::sqrt(n) / 2.0;
  r.gap = kSqrt2OverPi * r.sigma - r.mad;
  r.bound = kC * r.sigma / n;
  r.holds = r.gap >= r.bound;
  r.de_moivre = de_moivre_mad(k0_even);
  r.de_moivre_abs_diff = std::abs(r.de_moivre - r.mad);
  const double wnorm = std::sqrt(n);
  r.consequence_lhs = std::abs(r.mu - kSqrt2OverPi * wnorm);
  r.consequence_rhs = kC * wnorm / n;
  r.consequence_holds = r.consequence_lhs >= r.consequence_rhs;
  r.doubled_rhs = 2.0 * kC * wnorm / n;
  r.doubled_holds = r.consequence_lhs >= r.doubled_rhs;
  return r;
}

/// n^n e^-n sqrt(2 pi (n + 1/6)) <= n! <= n^n e^-n sqrt(2 pi (n + 1/5)),
/// checked in log space with log n! summed in extended precision.
struct StirlingReport {
  std::size_t n_max = 0;
  std::vector<std::size_t> failures;
  long double min_lower_margin = 0.0L;
  long double min_upper_margin = 0.0L;
  bool passed() const { return failures.empty(); }
};

inline StirlingReport stirling_gosper_check(std::size_t n_max) {
  if (n_max == 0) throw std::invalid_argument("stirling_gosper_check: n_max must be >= 1");
  StirlingReport r;
  r.n_max = n_max;
  r.min_lower_margin = r.min_upper_margin = std::numeric_limits<long double>::infinity();
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  long double log_fact = 0.0L, carry = 0.0L;  // Kahan-compensated sum of log k
  for (std::size_t k = 1; k <= n_max; ++k) {
    const long double n = static_cast<long double>(k);
    const long double y = std::log(n) - carry;
    const long double s = log_fact + y;
    carry = (s - log_fact) - y;
    log_fact = s;
    const long double base = n * std::log(n) - n;
    const long double lower = base + 0.5L * std::log(two_pi * (n + 1.0L / 6.0L));
    const long double upper = base + 0.5L * std::log(two_pi * (n + 1.0L / 5.0L));
    r.min_lower_margin = std::min(r.min_lower_margin, log_fact - lower);
    r.min_upper_margin = std::min(r.min_upper_margin, upper - log_fact);
    if (!(lower <= log_fact && log_fact <= upper)) r.failures.push_back(k);
  }
  return r;
}

/// D(e1, 0) under a dithered Floor map with delta = 1. For Rademacher Phi
/// every coordinate of A(e1) is +-1 and A(0) = 0, so D = 1 exactly, which
/// forces Delta_plus + Delta_times >= 1 - sqrt(2/pi).
struct BernoulliFloorReport {
  std::size_t trials = 0;
  std::size_t exceptions = 0;  ///< trials with D != 1
  Estimate mean_d;
  double floor = 1.0 - kSqrt2OverPi;
};

inline BernoulliFloorReport section2_bernoulli_floor(std::size_t m, std::size_t trials, std::uint64_t seed,
                                               EnsembleKind kind = EnsembleKind::rademacher,
                                               std::size_t n = 4, unsigned jobs = 1) {
  if (m == 0) throw std::invalid_argument("section2_bernoulli_floor: M must be >= 1");
  const Ensemble ens = Ensemble::make(kind);
  const Vector x = unit_vector(n, 0);
  const Vector y(n, 0.0);
  std::vector<double> d(trials);
  parallel_for(trials, jobs, [&](std::size_t i) {
    d[i] = pseudo_distance(QuantizedMap::sample(ens, m, n, 1.0, derive_seed(seed, {i})), x, y);
  });
  BernoulliFloorReport r;
  r.trials = trials;
  MeanAccumulator acc;
  for (double v : d) {
    acc.add(v);
    if (v != 1.0) ++r.exceptions;
  }
  r.mean_d = acc.estimate();
  return r;
}

/// Linear distortion of Phi on sampled pairs and the resulting quantized
/// l2 relation with an undithered rounding quantizer:
///   (1 - eps) ||x - y|| - delta <= ||Q(Phi x) - Q(Phi y)|| / sqrt(M) <= (1 + eps) ||x - y|| + delta.
struct LinearBaselineReport {
  double eps_hat = 0.0;
  std::size_t pairs = 0;
  std::size_t violations = 0;
  bool holds() const { return violations == 0; }
};

inline LinearBaselineReport linear_baseline(const Ensemble& ensemble, const SetSpec& set,
                                            std::size_t m, std::size_t pairs, std::uint64_t seed,
                                            double delta = 1.0) {
  validate(set);
  const std::size_t n = ambient_dim(set);
  const QuantizedMap map(sample_matrix(ensemble, m, n, derive_seed(seed, {0})), std::nullopt,
                         {delta, QuantizerVariant::round});
  Rng rng(derive_seed(seed, {1}));
  const double sqrt_m = std::sqrt(static_cast<double>(m));
  struct Row {
    double dist, linear, quantized;
  };
  std::vector<Row> rows;
  LinearBaselineReport r;
  r.pairs = pairs;
  for (std::size_t p = 0; p < pairs; ++p) {
    const Vector x = sample_point(set, rng);
    const Vector y = sample_point(set, rng);
    const double dist = norm2(difference(x, y));
    const double lin = norm2(map.project_linear(difference(x, y))) / sqrt_m;
    const auto cx = map.apply(x), cy = map.apply(y);
    double q = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = delta * static_cast<double>(cx.values[i] - cy.values[i]);
      q += e * e;
    }
    rows.push_back({dist, lin, std::sqrt(q) / sqrt_m});
    if (dist > 0.0) r.eps_hat = std::max(r.eps_hat, std::abs(lin / dist - 1.0));
  }
  for (const auto& row : rows) {
    const double tol = 1e-12 * (1.0 + row.dist + delta);
    const bool ok = (1.0 - r.eps_hat) * row.dist - delta <= row.quantized + tol &&
                    row.quantized <= (1.0 + r.eps_hat) * row.dist + delta + tol;
    if (!ok) ++r.violations;
  }
  return r;
}

}  // namespace qembed
