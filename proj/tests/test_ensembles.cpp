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
#include <numeric>
#include <stdexcept>
#include <vector>

#include "qembed/ensembles.hpp"
#include "qembed/oracles.hpp"
#include "qembed/parallel.hpp"
#include "qembed/random.hpp"

using namespace qembed;

TEST(Random, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    differs = differs || x != c.normal();
  }
  EXPECT_TRUE(differs);
}

TEST(Random, UniformInHalfOpenUnitInterval) {
  Rng r(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Random, DerivedSeedsDependOnPath) {
  EXPECT_EQ(derive_seed(5, {1, 2}), derive_seed(5, {1, 2}));
  EXPECT_NE(derive_seed(5, {1, 2}), derive_seed(5, {2, 1}));
  EXPECT_NE(derive_seed(5, {1}), derive_seed(6, {1}));
}

TEST(Parallel, MonteCarloIndependentOfJobs) {
  auto draw = [](Rng& r) { return r.normal() * r.uniform(); };
  const Estimate a = monte_carlo(50000, 9, 1, draw);
  const Estimate b = monte_carlo(50000, 9, 3, draw);
  const Estimate c = monte_carlo(50000, 9, 8, draw);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.samples, 50000u);
}

TEST(Parallel, ForwardsExceptions) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 37) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Parallel, MergeMatchesSequential) {
  MeanAccumulator all, left, right;
  for (int i = 0; i < 1000; ++i) {
    const double x = std::sin(i * 0.37);
    all.add(x);
    (i < 400 ? left : right).add(x);
  }
  left.merge(right);
  EXPECT_NEAR(left.mean(), all.mean(), 1e-14);
  EXPECT_NEAR(left.variance(), all.variance(), 1e-14);
}

TEST(Ensembles, Psi2Norms) {
  EXPECT_NEAR(psi2_norm(EnsembleKind::gaussian), 0.79788456080286535588, 1e-12);
  EXPECT_NEAR(psi2_norm(EnsembleKind::rademacher), 1.0, 1e-12);
  EXPECT_NEAR(psi2_norm(EnsembleKind::bounded_uniform), 0.86602540378443864676, 1e-12);
}

TEST(Ensembles, KappaSources) {
  EXPECT_EQ(Ensemble::make(EnsembleKind::gaussian).kappa_sg, 0.0);
  EXPECT_NEAR(Ensemble::make(EnsembleKind::rademacher).kappa_sg, 46.765371804359686925, 1e-9);
  EXPECT_NEAR(generic_kappa_bound(1.0), 46.765371804359686925, 1e-9);
  EXPECT_THROW(Ensemble::make(EnsembleKind::rademacher, KappaSource::exact_zero), std::invalid_argument);
  const auto est = Ensemble::make(EnsembleKind::rademacher, KappaSource::estimated, 20000, 3);
  EXPECT_EQ(est.kappa_source, KappaSource::estimated);
  EXPECT_GT(est.kappa_sg, 0.0);
  EXPECT_LT(est.kappa_sg, generic_kappa_bound(1.0));
}

TEST(Ensembles, DrawsHaveUnitVarianceAndSupport) {
  for (auto kind : {EnsembleKind::gaussian, EnsembleKind::rademacher, EnsembleKind::bounded_uniform}) {
    Rng r(11);
    MeanAccumulator sq;
    for (int i = 0; i < 200000; ++i) {
      const double x = draw(kind, r);
      if (kind == EnsembleKind::rademacher) {
        ASSERT_EQ(std::abs(x), 1.0);
      }
      if (kind == EnsembleKind::bounded_uniform) {
        ASSERT_LE(std::abs(x), std::sqrt(3.0));
      }
      sq.add(x * x);
    }
    const Estimate e = sq.estimate();
    EXPECT_NEAR(e.mean, 1.0, 4.0 * e.std_error + 1e-12) << to_string(kind);
  }
}

TEST(Ensembles, SampleMatrixIsDeterministic) {
  const auto ens = Ensemble::make(EnsembleKind::gaussian);
  const auto a = sample_matrix(ens, 7, 5, 99);
  const auto b = sample_matrix(ens, 7, 5, 99);
  EXPECT_EQ(a.entries, b.entries);
  EXPECT_EQ(a.entries.size(), 35u);
  EXPECT_EQ(a(2, 3), a.entries[2 * 5 + 3]);
  EXPECT_THROW(sample_matrix(ens, 0, 5, 1), std::invalid_argument);
  EXPECT_THROW(sample_matrix(ens, 3, 0, 1), std::invalid_argument);
}

TEST(Ensembles, GaussianFirstMomentIsExact) {
  const auto g = Ensemble::make(EnsembleKind::gaussian);
  const std::vector<double> u{3.0, 4.0};
  const Estimate e = mu_sg(g, u, 1000, 0, 1);
  EXPECT_NEAR(e.mean, 5.0 * 0.79788456080286535588, 1e-12);
}

TEST(Ensembles, BinomialFirstMoment) {
  EXPECT_DOUBLE_EQ(mu_sg_exact_binomial(2), 1.0);
  EXPECT_DOUBLE_EQ(mu_sg_exact_binomial(4), 1.5);
  EXPECT_DOUBLE_EQ(mu_sg_exact_binomial(10), 2.4609375);
  EXPECT_NEAR(mu_sg_exact_binomial(40), 5.0148275047831702977, 1e-12);
  const auto r = Ensemble::make(EnsembleKind::rademacher);
  const std::vector<double> ones(10, 1.0);
  const Estimate e = mu_sg(r, ones, 200000, 4, 1);
  EXPECT_NEAR(e.mean, 2.4609375, 4.0 * e.std_error);
  // continuous extension above the exact range stays close to sqrt(2n/pi)
  EXPECT_NEAR(mu_sg_exact_binomial(1000) / std::sqrt(1000.0), 0.79788456080286535588, 1e-3);
}

TEST(Ensembles, TailGapGaussianIsZero) {
  const auto g = Ensemble::make(EnsembleKind::gaussian);
  const std::vector<double> u{0.6, 0.8};
  EXPECT_EQ(berry_esseen_gap(g, u, 1000, 0, 1).mean, 0.0);
}

TEST(Ensembles, TailGapRademacherUnitVector) {
  const auto r = Ensemble::make(EnsembleKind::rademacher);
  const std::vector<double> e1{1.0, 0.0, 0.0};
  const Estimate e = berry_esseen_gap(r, e1, 40960, 5, 1);
  EXPECT_NEAR(e.mean, 0.53537732154787983765, 1e-9);
  EXPECT_NEAR(oracle::rademacher_unit_gap_quadrature(), 0.53537732154787983765, 1e-8);
}

TEST(Ensembles, TailGapShrinksForSpreadVectors) {
  const auto r = Ensemble::make(EnsembleKind::rademacher);
  std::vector<double> u(64, 1.0 / 8.0);
  const Estimate e = berry_esseen_gap(r, u, 40960, 6, 1);
  EXPECT_LT(e.mean, 0.1);
  EXPECT_LE(e.mean, generic_kappa_bound(1.0) * (1.0 / 8.0) + 3.0 * e.std_error);
  std::vector<double> not_unit(4, 1.0);
  EXPECT_THROW(berry_esseen_gap(r, not_unit, 100, 0, 1), std::invalid_argument);
}

TEST(Ensembles, TailFitRate) {
  const std::vector<double> grid{0.5, 1.0, 1.5, 2.0, 2.5};
  const auto fit = fit_tail_bound(Ensemble::make(EnsembleKind::gaussian), grid, 100000, 8);
  ASSERT_EQ(fit.tail.size(), grid.size());
  EXPECT_GT(fit.rate, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double a = psi2_norm(EnsembleKind::gaussian);
    EXPECT_LE(fit.tail[i], fit.prefactor * std::exp(-fit.rate * grid[i] * grid[i] / (a * a)) + 1e-12);
  }
}
