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

// Independent reference computations used to cross-check the closed forms
// in the library. Each one follows a definition literally (enumeration,
// piecewise integration) and shares no code path with what it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "qembed/quantizer.hpp"
#include "qembed/vector_ops.hpp"

namespace qembed::oracle {

/// #{k : F^t(a - k delta, b - k delta)} by enumerating every k that could
/// possibly qualify.
inline std::int64_t soft_count_brute(double a, double b, double t, double delta) {
  const double lo = std::min(a, b) - std::abs(t);
  const double hi = std::max(a, b) + std::abs(t);
  const auto k_lo = static_cast<std::int64_t>(std::floor(lo / delta)) - 2;
  const auto k_hi = static_cast<std::int64_t>(std::ceil(hi / delta)) + 2;
  std::int64_t count = 0;
  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    const double kd = static_cast<double>(k) * delta;
    const double ak = a - kd, bk = b - kd;
    const bool first = ak > t && bk <= -t;
    const bool second = ak < -t && bk >= t;
    if (first || second) ++count;
  }
  return count;
}

/// int_0^1 |floor(x + xi) - floor(y + xi)| dxi, integrated exactly over the
/// pieces on which both floors are constant.
inline double dithered_floor_integral(double x, double y) {
  std::vector<double> cuts{0.0, 1.0};
  for (double v : {x, y}) {
    const double c = std::ceil(v) - v;  // xi where v + xi reaches an integer
    if (c > 0.0 && c < 1.0) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double w = cuts[i + 1] - cuts[i];
    if (w <= 0.0) continue;
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    total += w * std::abs(std::floor(x + mid) - std::floor(y + mid));
  }
  return total;
}

/// sup over all K-subsets S of ||g_S||, by exhaustive enumeration.
inline double sparse_sup_brute(std::span<const double> g, std::size_t k) {
  const std::size_t n = g.size();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
  double best = 0.0;
  // prev_permutation over a descending-sorted mask visits every subset once
  do {
    std::vector<double> sq;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) sq.push_back(g[i] * g[i]);
    std::sort(sq.begin(), sq.end(), std::greater<>());
    double s = 0.0;
    for (double v : sq) s += v;
    best = std::max(best, std::sqrt(s));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

/// Exact sup{r >= 0 : A(x + r u) = A(x)} for a Floor map, from the
/// per-coordinate distance to the next threshold along the ray.
inline double exit_radius(const QuantizedMap& map, std::span<const double> x,
                          std::span<const double> u) {
  const auto a = map.project(x);
  const auto b = map.project_linear(u);
  const double delta = map.delta();
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double k = std::floor(a[i] / delta);
    if (b[i] > 0.0) r = std::min(r, ((k + 1.0) * delta - a[i]) / b[i]);
    if (b[i] < 0.0) r = std::min(r, (a[i] - k * delta) / -b[i]);
  }
  return r;
}

/// int_0^inf |P(|X| >= t) - P(|g| >= t)| dt for X = +-1, by composite
/// trapezoid on [0, 1] and [1, t_max] (the integrand jumps at t = 1).
inline double rademacher_unit_gap_quadrature(std::size_t steps = 200000, double t_max = 12.0) {
  auto trapezoid = [steps](auto f, double lo, double hi) {
    const double h = (hi - lo) / static_cast<double>(steps);
    double s = 0.5 * (f(lo) + f(hi));
    for (std::size_t i = 1; i < steps; ++i) s += f(lo + h * static_cast<double>(i));
    return s * h;
  };
  return trapezoid([](double t) { return 1.0 - two_sided_normal_tail(t); }, 0.0, 1.0) +
         trapezoid([](double t) { return two_sided_normal_tail(t); }, 1.0, t_max);
}

}  // namespace qembed::oracle
