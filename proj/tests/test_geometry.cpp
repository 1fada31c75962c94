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
#include <numbers>
#include <vector>

#include "qembed/geometry.hpp"
#include "qembed/oracles.hpp"

using namespace qembed;

TEST(Basis, DctIsOrthonormal) {
  const Basis b = dct2_basis(12);
  for (std::size_t i = 0; i < 12; ++i) {
    const auto x = b.synthesize(unit_vector(12, i));
    EXPECT_NEAR(norm2(x), 1.0, 1e-12);
    const auto back = b.analyze(x);
    for (std::size_t j = 0; j < 12; ++j) EXPECT_NEAR(back[j], i == j ? 1.0 : 0.0, 1e-12);
  }
}

TEST(Sets, SamplesLieInTheirSet) {
  const std::vector<SetSpec> sets{
      SparseBall{20, 3, 1.5, std::nullopt},
      SparseBall{16, 2, 1.0, dct2_basis(16)},
      LowRankBall{4, 5, 2, 2.0},
      EuclideanBall{7, 0.5},
      FiniteSet{{{1.0, 2.0}, {0.0, -1.0}}},
  };
  Rng r(31);
  for (const auto& s : sets)
    for (int i = 0; i < 200; ++i) {
      const auto x = sample_point(s, r);
      ASSERT_EQ(x.size(), ambient_dim(s));
      ASSERT_TRUE(contains(s, x));
    }
  EXPECT_FALSE(contains(sets[0], std::vector<double>(20, 1.0)));
  EXPECT_FALSE(contains(sets[3], std::vector<double>(7, 1.0)));
}

TEST(Sets, Validation) {
  EXPECT_THROW(validate(SparseBall{4, 5, 1.0, std::nullopt}), std::invalid_argument);
  EXPECT_THROW(validate(SparseBall{4, 0, 1.0, std::nullopt}), std::invalid_argument);
  EXPECT_THROW(validate(EuclideanBall{3, -1.0}), std::invalid_argument);
  EXPECT_THROW(validate(FiniteSet{}), std::invalid_argument);
  EXPECT_THROW(validate(FiniteSet{{{1.0}, {1.0, 2.0}}}), std::invalid_argument);
  EXPECT_THROW(validate(LowRankBall{3, 3, 4, 1.0}), std::invalid_argument);
}

TEST(Sets, Diameter) {
  EXPECT_DOUBLE_EQ(diameter(EuclideanBall{3, 0.7}), 0.7);
  EXPECT_DOUBLE_EQ(diameter(SparseBall{10, 2, 2.0, std::nullopt}), 2.0);
  EXPECT_DOUBLE_EQ(diameter(FiniteSet{{{3.0, 4.0}, {0.0, 1.0}}}), 5.0);
}

TEST(SupOracle, SparseMatchesExhaustiveSearch) {
  Rng r(32);
  for (std::size_t n = 1; n <= 10; ++n)
    for (std::size_t k = 1; k <= n; ++k) {
      std::vector<double> g(n);
      for (double& v : g) v = r.normal();
      ASSERT_EQ(sup_oracle(SparseBall{n, k, 1.0, std::nullopt}, g), oracle::sparse_sup_brute(g, k));
      ASSERT_EQ(sup_oracle(SparseBall{n, k, 2.0, std::nullopt}, g), 2.0 * oracle::sparse_sup_brute(g, k));
    }
}

TEST(SupOracle, LowRankFullRankIsFrobenius) {
  Rng r(33);
  std::vector<double> g(12);
  for (double& v : g) v = r.normal();
  EXPECT_NEAR(sup_oracle(LowRankBall{3, 4, 3, 1.0}, g), norm2(g), 1e-12);
  EXPECT_LT(sup_oracle(LowRankBall{3, 4, 1, 1.0}, g), norm2(g));
  // rank one: the top singular value is attained by its singular pair
  std::vector<double> rank1(12);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) rank1[i * 4 + j] = (1.0 + i) * (2.0 - j);
  EXPECT_NEAR(sup_oracle(LowRankBall{3, 4, 1, 1.0}, rank1), norm2(rank1), 1e-12);
}

TEST(SupOracle, FiniteAndBall) {
  const std::vector<double> g{1.0, -2.0};
  EXPECT_DOUBLE_EQ(sup_oracle(FiniteSet{{{1.0, 0.0}, {0.0, 1.0}}}, g), 2.0);
  EXPECT_DOUBLE_EQ(sup_oracle(EuclideanBall{2, 2.0}, g), 2.0 * std::sqrt(5.0));
  EXPECT_THROW(sup_oracle(EuclideanBall{3, 1.0}, g), std::invalid_argument);
}

TEST(Width, EuclideanDisc) {
  const auto w = width_estimate(EuclideanBall{2, 1.0}, 100000, 34);
  EXPECT_NEAR(w.mean, 1.2533141373155002512, 3.0 * w.std_error);
}

TEST(Width, Singleton) {
  const std::vector<double> u{0.3, -0.4, 1.2};
  const auto w = width_estimate(FiniteSet{{u}}, 100000, 35);
  EXPECT_NEAR(w.mean, std::sqrt(2.0 / std::numbers::pi) * norm2(u), 3.0 * w.std_error);
}

TEST(Width, IndependentOfJobs) {
  const SetSpec s = SparseBall{64, 4, 1.0, std::nullopt};
  const auto a = width_estimate(s, 20000, 36, 1);
  const auto b = width_estimate(s, 20000, 36, 5);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(Width, Properties) {
  const SetSpec s = FiniteSet{{{1.0, 0.0, 0.0}, {0.0, 2.0, 1.0}, {-1.0, 0.5, 0.0}}};
  const std::vector<double> shift{0.5, -0.5, 0.25};
  const auto rep = width_properties_check(s, 2.0, shift, 20000, 37);
  EXPECT_TRUE(rep.homogeneity_exact);
  EXPECT_TRUE(rep.diameter_link_holds);
  ASSERT_TRUE(rep.translation_gap.has_value());
  EXPECT_TRUE(rep.translation_holds);
  EXPECT_TRUE(rep.holds());
  const auto ball = width_properties_check(EuclideanBall{5, 1.0}, 0.5, {}, 5000, 38);
  EXPECT_TRUE(ball.holds());
  EXPECT_FALSE(ball.translation_gap.has_value());
}

TEST(Width, ScaleSet) {
  const auto scaled = scale_set(SparseBall{8, 2, 1.0, std::nullopt}, 3.0);
  EXPECT_DOUBLE_EQ(diameter(scaled), 3.0);
  const auto w1 = width_estimate(SparseBall{8, 2, 1.0, std::nullopt}, 1000, 39);
  const auto w3 = width_estimate(scaled, 1000, 39);
  EXPECT_NEAR(w3.mean, 3.0 * w1.mean, 1e-12 * w3.mean);
}

TEST(Structured, WidthProxyAndEntropy) {
  const SetSpec s = SparseBall{512, 4, 1.0, std::nullopt};
  EXPECT_NEAR(*w_bar_squared(s), 4.0 * std::log(256.0), 1e-12);
  EXPECT_DOUBLE_EQ(*w_bar_squared(LowRankBall{4, 6, 2, 1.0}), 20.0);
  EXPECT_FALSE(w_bar_squared(EuclideanBall{3, 1.0}).has_value());
  EXPECT_GT(entropy_bound(s, 0.1), entropy_bound(s, 0.5));
  const std::vector<double> grid{0.05, 0.1, 0.2, 0.5};
  const auto c = structured_constants(s, grid);
  ASSERT_EQ(c.entropy.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_LE(c.entropy[i], c.constant * c.envelope[i] * (1 + 1e-12));
}

TEST(Net, CoversItsInput) {
  Rng r(40);
  std::vector<Vector> pts;
  for (int i = 0; i < 300; ++i) pts.push_back(sample_point(EuclideanBall{2, 1.0}, r));
  const auto net = empirical_net(pts, 0.3);
  EXPECT_LE(net.cover_radius, 0.3);
  EXPECT_LT(net.points.size(), pts.size());
  EXPECT_DOUBLE_EQ(net.log_size, std::log(static_cast<double>(net.points.size())));
  for (const auto& p : pts) {
    double best = 1e300;
    for (const auto& q : net.points) best = std::min(best, norm2(difference(p, q)));
    ASSERT_LE(best, 0.3);
  }
}

TEST(AntiSparsity, Levels) {
  EXPECT_DOUBLE_EQ(anti_sparsity_level(std::vector<double>(9, -2.0)), 9.0);
  EXPECT_DOUBLE_EQ(anti_sparsity_level(unit_vector(9, 4)), 1.0);
  EXPECT_TRUE(anti_sparsity(std::vector<double>{1.0, 1.0, 1.0, 1.0}, 4.0).passed);
  EXPECT_FALSE(anti_sparsity(std::vector<double>{1.0, 0.0, 0.0, 0.0}, 2.0).passed);
  EXPECT_THROW(anti_sparsity_level(std::vector<double>(3, 0.0)), std::invalid_argument);
  const auto rot = rotate_antisparsify(unit_vector(64, 7));
  EXPECT_DOUBLE_EQ(rot.level_before, 1.0);
  EXPECT_GT(rot.level_after, 20.0);
  EXPECT_NEAR(norm2(rot.v), 1.0, 1e-12);
}

TEST(MinimalM, Scaling) {
  const SetSpec s = SparseBall{256, 4, 1.0, std::nullopt};
  const auto a = minimal_m(s, RequirementKind::embed_structured, 0.2, 0.5, 1.0);
  const auto b = minimal_m(s, RequirementKind::embed_structured, 0.1, 0.5, 1.0);
  EXPECT_GT(b, 3 * a);
  EXPECT_DOUBLE_EQ(minimal_m_value(s, RequirementKind::width_structured, 0.3, 1.0, 2.0),
                   2.0 * minimal_m_value(s, RequirementKind::width_structured, 0.3, 1.0, 1.0));
  EXPECT_GT(minimal_m(EuclideanBall{3, 1.0}, RequirementKind::embed_general, 0.5, 1.0, 1.0), 0u);
  EXPECT_THROW(minimal_m(EuclideanBall{3, 1.0}, RequirementKind::embed_structured, 0.5, 1.0, 1.0),
               std::invalid_argument);
  EXPECT_THROW(minimal_m(s, RequirementKind::embed_structured, 1.5, 1.0, 1.0), std::invalid_argument);
}
