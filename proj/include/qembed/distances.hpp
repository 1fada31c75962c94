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

// The l1 code pseudo-distance D, its softened variants D^t and the
// threshold-counting identities that connect them.
//
// For a pair of scalars (a, b) and a softening t, the one-dimensional count
// is the number of k in Z with F^t(a - k*delta, b - k*delta), where
//
//   F^t(a, b) = {a > t, b <= -t} U {a < -t, b >= t}.
//
// D^t(x, y) = (delta / M) * sum_i count(Phi_i x + xi_i, Phi_i y + xi_i, t).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <vector>

#include "qembed/errors.hpp"
#include "qembed/quantizer.hpp"
#include "qembed/vector_ops.hpp"

namespace qembed {

struct SoftCount {
  std::int64_t count = 0;
  /// One of (a +- t)/delta, (b +- t)/delta lies within 1e-12 of an integer.
  bool near_tie = false;
};

namespace detail {

inline std::int64_t to_index(double v) {
  if (!std::isfinite(v) || std::abs(v) > 0x1.0p60)
    throw std::invalid_argument("soft_count_1d: threshold index out of range");
  return static_cast<std::int64_t>(v);
}

inline bool near_integer(double v) { return std::abs(v - std::nearbyint(v)) <= 1e-12; }

}  // namespace detail

/// Closed-form count of separating thresholds under softening t.
///
/// The two branches of F^t select integer intervals
///   S1 = {k : b - k delta <= -t  and  a - k delta > t}
///   S2 = {k : a - k delta < -t   and  b - k delta >= t}.
/// Endpoints are estimated from (a -+ t)/delta, (b +- t)/delta and then
/// snapped so that the predicates, evaluated exactly as written above, hold
/// inside and fail just outside. S1 and S2 are disjoint for t >= 0; for
/// t < 0 their overlap is counted once.
inline SoftCount soft_count_1d_diag(double a, double b, double t, double delta) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(t))
    throw std::invalid_argument("soft_count_1d: non-finite input");
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw std::invalid_argument("soft_count_1d: delta must be positive");

  auto kd = [delta](std::int64_t k) { return static_cast<double>(k) * delta; };
  auto p1a = [&](std::int64_t k) { return a - kd(k) > t; };
  auto p1b = [&](std::int64_t k) { return b - kd(k) <= -t; };
  auto p2a = [&](std::int64_t k) { return a - kd(k) < -t; };
  auto p2b = [&](std::int64_t k) { return b - kd(k) >= t; };

  // largest k with p(k), p true for small k
  auto last_true = [](auto p, std::int64_t k) {
    while (!p(k)) --k;
    while (p(k + 1)) ++k;
    return k;
  };
  // smallest k with p(k), p true for large k
  auto first_true = [](auto p, std::int64_t k) {
    while (!p(k)) ++k;
    while (p(k - 1)) --k;
    return k;
  };

  const double amt = (a - t) / delta, apt = (a + t) / delta;
  const double bpt = (b + t) / delta, bmt = (b - t) / delta;
  const std::int64_t hi1 = last_true(p1a, detail::to_index(std::ceil(amt)) - 1);
  const std::int64_t lo1 = first_true(p1b, detail::to_index(std::ceil(bpt)));
  const std::int64_t lo2 = first_true(p2a, detail::to_index(std::floor(apt)) + 1);
  const std::int64_t hi2 = last_true(p2b, detail::to_index(std::floor(bmt)));

  auto size = [](std::int64_t lo, std::int64_t hi) { return hi >= lo ? hi - lo + 1 : 0; };
  const std::int64_t overlap = size(std::max(lo1, lo2), std::min(hi1, hi2));
  SoftCount out;
  out.count = size(lo1, hi1) + size(lo2, hi2) - overlap;
  out.near_tie = detail::near_integer(amt) || detail::near_integer(apt) ||
                 detail::near_integer(bpt) || detail::near_integer(bmt);
  return out;
}

inline std::int64_t soft_count_1d(double a, double b, double t, double delta) {
  return soft_count_1d_diag(a, b, t, delta).count;
}

/// d^t(a, b) = delta * soft_count_1d(a, b, t, delta).
inline double soft_distance_1d(double a, double b, double t, double delta) {
  return delta * static_cast<double>(soft_count_1d(a, b, t, delta));
}

/// Per-coordinate threshold counts for a vector pair.
struct ThresholdCount {
  std::vector<std::int64_t> per_coordinate;
  double t = 0.0;
  double delta = 1.0;
  std::size_t near_ties = 0;

  /// (delta / M) * sum of counts.
  double value() const {
    std::int64_t s = 0;
    for (auto c : per_coordinate) s += c;
    return delta * static_cast<double>(s) / static_cast<double>(per_coordinate.size());
  }
};

namespace detail {

/// Quantizer inputs shifted so that thresholds sit on delta*Z.
inline std::vector<double> threshold_frame(const QuantizedMap& map, std::span<const double> x) {
  auto p = map.project(x);
  const double off = threshold_offset(map.quantizer());
  if (off != 0.0)
    for (double& v : p) v -= off;
  return p;
}

inline void check_pair(const QuantizedMap& map, std::span<const double> x,
                       std::span<const double> y) {
  if (x.size() != map.cols() || y.size() != map.cols())
    throw std::invalid_argument("distance: dimension mismatch");
}

}  // namespace detail

inline ThresholdCount threshold_count(const QuantizedMap& map, std::span<const double> x,
                                      std::span<const double> y, double t) {
  detail::check_pair(map, x, y);
  const auto a = detail::threshold_frame(map, x);
  const auto b = detail::threshold_frame(map, y);
  ThresholdCount tc{std::vector<std::int64_t>(a.size()), t, map.delta(), 0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto c = soft_count_1d_diag(a[i], b[i], t, map.delta());
    tc.per_coordinate[i] = c.count;
    if (c.near_tie) ++tc.near_ties;
  }
  return tc;
}

/// |A_i(x) - A_i(y)| / delta per coordinate: the number of quantization
/// thresholds (hyperplanes of the wave partition) separating x and y.
inline std::vector<std::int64_t> hyperplane_count(const QuantizedMap& map,
                                                  std::span<const double> x,
                                                  std::span<const double> y) {
  detail::check_pair(map, x, y);
  const auto cx = map.apply(x);
  const auto cy = map.apply(y);
  std::vector<std::int64_t> out(cx.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(cx.values[i] - cy.values[i]);
  return out;
}

/// D(x, y) = (1/M) ||A(x) - A(y)||_1 = (delta/M) sum_i |code_i(x) - code_i(y)|.
/// Cross-checked against the t = 0 threshold count on every coordinate that
/// is not a boundary tie.
inline double pseudo_distance(const QuantizedMap& map, std::span<const double> x,
                              std::span<const double> y) {
  const auto counts = hyperplane_count(map, x, y);
  const auto a = detail::threshold_frame(map, x);
  const auto b = detail::threshold_frame(map, y);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    total += counts[i];
    const auto c = soft_count_1d_diag(a[i], b[i], 0.0, map.delta());
    if (!c.near_tie && c.count != counts[i])
      throw std::logic_error("pseudo_distance: code difference disagrees with threshold count");
  }
  return map.delta() * static_cast<double>(total) / static_cast<double>(counts.size());
}

/// D^t(x, y); nonincreasing in t and equal to D at t = 0.
inline double soft_pseudo_distance(const QuantizedMap& map, std::span<const double> x,
                                   std::span<const double> y, double t) {
  return threshold_count(map, x, y, t).value();
}

/// D, D^{|tau|}, D^{-|tau|} and per-coordinate bound slack (lhs - bound,
/// never positive when the bounds hold).
struct SoftDistanceReport {
  double d0 = 0.0;
  double dt_plus = 0.0;
  double dt_minus = 0.0;
  /// |d^{|tau|} - d^{-|tau|}| - 4(delta + 2|tau|)
  std::vector<double> slack_ts;
  /// |d^{|tau|} - |a - b|| - 4(delta + |tau|)
  std::vector<double> slack_abs;

  bool sandwich_holds() const { return dt_plus <= d0 && d0 <= dt_minus; }
  bool lemma1_holds() const {
    return std::all_of(slack_ts.begin(), slack_ts.end(), [](double s) { return s <= 0.0; }) &&
           std::all_of(slack_abs.begin(), slack_abs.end(), [](double s) { return s <= 0.0; });
  }
};

inline SoftDistanceReport soft_distance_report(const QuantizedMap& map, std::span<const double> x,
                                               std::span<const double> y, double tau) {
  detail::check_pair(map, x, y);
  const double t = std::abs(tau);
  const double delta = map.delta();
  const auto a = detail::threshold_frame(map, x);
  const auto b = detail::threshold_frame(map, y);
  SoftDistanceReport r;
  std::int64_t s0 = 0, sp = 0, sm = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto c0 = soft_count_1d(a[i], b[i], 0.0, delta);
    const auto cp = soft_count_1d(a[i], b[i], t, delta);
    const auto cm = soft_count_1d(a[i], b[i], -t, delta);
    s0 += c0;
    sp += cp;
    sm += cm;
    const double dp = delta * static_cast<double>(cp), dm = delta * static_cast<double>(cm);
    r.slack_ts.push_back(std::abs(dp - dm) - 4.0 * (delta + 2.0 * t));
    r.slack_abs.push_back(std::abs(dp - std::abs(a[i] - b[i])) - 4.0 * (delta + t));
  }
  const double scale = delta / static_cast<double>(a.size());
  r.d0 = scale * static_cast<double>(s0);
  r.dt_plus = scale * static_cast<double>(sp);
  r.dt_minus = scale * static_cast<double>(sm);
  return r;
}

/// Both scalar soft-distance bounds for one pair.
struct Lemma1Values {
  double lhs_ts = 0.0;     ///< |d^t - d^s|
  double bound_ts = 0.0;   ///< 4 (delta + |t - s|)
  double lhs_abs = 0.0;    ///< |d^t - |a - b||
  double bound_abs = 0.0;  ///< 4 (delta + |t|)

  bool holds() const { return lhs_ts <= bound_ts && lhs_abs <= bound_abs; }
};

inline Lemma1Values lemma1_check(double a, double b, double t, double s, double delta) {
  const double dt = soft_distance_1d(a, b, t, delta);
  const double ds = soft_distance_1d(a, b, s, delta);
  return {std::abs(dt - ds), 4.0 * (delta + std::abs(t - s)), std::abs(dt - std::abs(a - b)),
          4.0 * (delta + std::abs(t))};
}

/// Continuity of D^t under l2 perturbations:
///   D^{t + eta sqrt(P)}(x0, y0) - 4(delta/P + eta/sqrt(P))
///     <= D^t(x0 + xp, y0 + yp)
///     <= D^{t - eta sqrt(P)}(x0, y0) + 4(delta/P + eta/sqrt(P)).
struct Lemma3Result {
  double lower = 0.0;
  double middle = 0.0;
  double upper = 0.0;
  bool holds = false;
};

inline Lemma3Result lemma3_check(const QuantizedMap& map, std::span<const double> x0,
                                 std::span<const double> y0, std::span<const double> xp,
                                 std::span<const double> yp, double t, double eta, double p_cap) {
  if (!(eta > 0.0)) throw std::invalid_argument("lemma3_check: eta must be positive");
  if (!(p_cap >= 1.0)) throw std::invalid_argument("lemma3_check: P must be >= 1");
  const double m = static_cast<double>(map.rows());
  const double limit = eta * std::sqrt(m) * (1.0 + 1e-12);
  if (norm2(map.project_linear(xp)) > limit || norm2(map.project_linear(yp)) > limit)
    throw precondition_failed("lemma3_check: ||Phi x'|| or ||Phi y'|| exceeds eta sqrt(M)");
  const Vector x1 = sum(x0, xp);
  const Vector y1 = sum(y0, yp);
  const double shift = eta * std::sqrt(p_cap);
  const double slack = 4.0 * (map.delta() / p_cap + eta / std::sqrt(p_cap));
  Lemma3Result r;
  r.lower = soft_pseudo_distance(map, x0, y0, t + shift) - slack;
  r.middle = soft_pseudo_distance(map, x1, y1, t);
  r.upper = soft_pseudo_distance(map, x0, y0, t - shift) + slack;
  r.holds = r.lower <= r.middle && r.middle <= r.upper;
  return r;
}

}  // namespace qembed
