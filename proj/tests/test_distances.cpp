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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qembed/distances.hpp"
#include "qembed/oracles.hpp"

using namespace qembed;

TEST(SoftCount, MatchesEnumeration) {
  Rng r(21);
  constexpr double deltas[] = {0.1, 0.25, 1.0, 2.0, 3.7};
  for (int i = 0; i < 20000; ++i) {
    const double a = -20.0 + 40.0 * r.uniform();
    const double b = -20.0 + 40.0 * r.uniform();
    const double t = -3.0 + 6.0 * r.uniform();
    const double d = deltas[r.index(5)];
    ASSERT_EQ(soft_count_1d(a, b, t, d), oracle::soft_count_brute(a, b, t, d)) << a << " " << b << " " << t << " " << d;
  }
}

TEST(SoftCount, MatchesEnumerationOnGridPoints) {
  // inputs on the threshold lattice, where every predicate is a tie
  for (int ia = -12; ia <= 12; ++ia)
    for (int ib = -12; ib <= 12; ++ib)
      for (int it = -6; it <= 6; ++it) {
        const double a = 0.25 * ia, b = 0.25 * ib, t = 0.25 * it;
        for (double d : {0.25, 0.5, 1.0})
          ASSERT_EQ(soft_count_1d(a, b, t, d), oracle::soft_count_brute(a, b, t, d))
              << a << " " << b << " " << t << " " << d;
      }
}

TEST(SoftCount, ZeroSofteningCountsFloorDifference) {
  Rng r(22);
  for (int i = 0; i < 10000; ++i) {
    const double a = -10.0 + 20.0 * r.uniform();
    const double b = -10.0 + 20.0 * r.uniform();
    ASSERT_EQ(soft_count_1d(a, b, 0.0, 1.0), std::abs(static_cast<std::int64_t>(std::floor(a)) -
                                                      static_cast<std::int64_t>(std::floor(b))));
  }
}

TEST(SoftCount, KnownValues) {
  EXPECT_EQ(soft_count_1d(2.5, 0.5, 0.0, 1.0), 2);
  EXPECT_EQ(soft_count_1d(2.5, 0.5, 0.4, 1.0), 2);
  EXPECT_EQ(soft_count_1d(2.5, 0.5, 0.6, 1.0), 0);
  EXPECT_EQ(soft_count_1d(2.5, 0.5, -0.6, 1.0), 4);
  EXPECT_EQ(soft_count_1d(1.0, 1.0, 0.0, 1.0), 0);
  EXPECT_EQ(soft_count_1d(1.0, 1.0, -0.1, 1.0), 1);
  EXPECT_TRUE(soft_count_1d_diag(2.0, 0.5, 0.0, 1.0).near_tie);
  EXPECT_THROW(soft_count_1d(1.0, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST(SoftCount, SymmetricAndMonotone) {
  Rng r(23);
  for (int i = 0; i < 5000; ++i) {
    const double a = -8.0 + 16.0 * r.uniform(), b = -8.0 + 16.0 * r.uniform();
    const double d = 0.2 + r.uniform();
    std::int64_t prev = std::numeric_limits<std::int64_t>::max();
    for (int k = -10; k <= 10; ++k) {
      const double t = 0.3 * k;
      const auto c = soft_count_1d(a, b, t, d);
      ASSERT_EQ(c, soft_count_1d(b, a, t, d));
      ASSERT_LE(c, prev);
      prev = c;
    }
  }
}

TEST(SoftDistance, ScalarBounds) {
  Rng r(24);
  for (int i = 0; i < 20000; ++i) {
    const double a = -20.0 + 40.0 * r.uniform(), b = -20.0 + 40.0 * r.uniform();
    const double t = -3.0 + 6.0 * r.uniform(), s = -3.0 + 6.0 * r.uniform();
    const double d = 0.05 + 2.0 * r.uniform();
    const auto v = lemma1_check(a, b, t, s, d);
    ASSERT_TRUE(v.holds()) << a << " " << b << " " << t << " " << s << " " << d;
  }
}

namespace {

QuantizedMap small_map(std::uint64_t seed, std::size_t m = 40, std::size_t n = 5, double delta = 0.7) {
  return QuantizedMap::sample(Ensemble::make(EnsembleKind::gaussian), m, n, delta, seed);
}

std::vector<double> random_vector(Rng& r, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& e : v) e = scale * r.normal();
  return v;
}

}  // namespace

TEST(PseudoDistance, CountsSeparatingThresholds) {
  const auto map = small_map(1);
  Rng r(25);
  const auto x = random_vector(r, 5), y = random_vector(r, 5);
  const auto cx = map.apply(x), cy = map.apply(y);
  double expected = 0.0;
  for (std::size_t i = 0; i < cx.values.size(); ++i) expected += std::abs(cx.values[i] - cy.values[i]);
  expected *= 0.7 / 40.0;
  EXPECT_DOUBLE_EQ(pseudo_distance(map, x, y), expected);
  EXPECT_DOUBLE_EQ(pseudo_distance(map, y, x), expected);
  EXPECT_EQ(pseudo_distance(map, x, x), 0.0);
  EXPECT_DOUBLE_EQ(soft_pseudo_distance(map, x, y, 0.0), expected);
  const auto h = hyperplane_count(map, x, y);
  ASSERT_EQ(h.size(), 40u);
  EXPECT_EQ(h[3], std::abs(cx.values[3] - cy.values[3]));
}

TEST(PseudoDistance, SandwichAndPerCoordinateBounds) {
  Rng r(26);
  for (int i = 0; i < 200; ++i) {
    const auto map = small_map(100 + i);
    const auto x = random_vector(r, 5, 2.0), y = random_vector(r, 5, 2.0);
    const auto rep = soft_distance_report(map, x, y, 2.0 * r.uniform());
    ASSERT_TRUE(rep.sandwich_holds());
    ASSERT_TRUE(rep.lemma1_holds());
  }
}

TEST(PseudoDistance, RejectsDimensionMismatch) {
  const auto map = small_map(2);
  EXPECT_THROW(pseudo_distance(map, std::vector<double>(5), std::vector<double>(4)), std::invalid_argument);
}

TEST(Continuity, PerturbedDistanceIsSandwiched) {
  Rng r(27);
  for (int i = 0; i < 200; ++i) {
    const auto map = small_map(200 + i, 64, 6, 0.5);
    const auto x = random_vector(r, 6), y = random_vector(r, 6);
    auto xp = random_vector(r, 6), yp = random_vector(r, 6);
    const double eta = 0.05 + 0.2 * r.uniform();
    const double lim = eta * 8.0 * (1.0 - 1e-9);
    const double sx = lim / norm2(map.project_linear(xp)), sy = lim / norm2(map.project_linear(yp));
    const double shrink = r.uniform();
    for (double& e : xp) e *= sx * shrink;
    for (double& e : yp) e *= sy;
    const double t = -1.0 + 2.0 * r.uniform();
    const auto res = lemma3_check(map, x, y, xp, yp, t, eta, 1.0 + static_cast<double>(r.index(20)));
    ASSERT_TRUE(res.holds) << res.lower << " " << res.middle << " " << res.upper;
  }
}

TEST(Continuity, RejectsLargePerturbation) {
  const auto map = small_map(3, 16, 4, 1.0);
  const std::vector<double> x(4, 0.0), big{10.0, 10.0, 10.0, 10.0};
  EXPECT_THROW(lemma3_check(map, x, x, big, x, 0.0, 0.01, 1.0), precondition_failed);
  EXPECT_THROW(lemma3_check(map, x, x, x, x, 0.0, 0.0, 1.0), std::invalid_argument);
}
