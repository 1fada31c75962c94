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

// Symmetric unit-variance sub-Gaussian ensembles and the constants that
// govern how far their projections drift from Gaussian behaviour.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qembed/parallel.hpp"
#include "qembed/random.hpp"
#include "qembed/vector_ops.hpp"

namespace qembed {

enum class EnsembleKind { gaussian, rademacher, bounded_uniform };

/// Where the Berry-Esseen constant of an Ensemble came from.
enum class KappaSource { exact_zero, generic_bound, estimated };

inline std::string_view to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::gaussian: return "gaussian";
    case EnsembleKind::rademacher: return "rademacher";
    case EnsembleKind::bounded_uniform: return "uniform";
  }
  return "?";
}

inline std::string_view to_string(KappaSource k) {
  switch (k) {
    case KappaSource::exact_zero: return "exact-zero";
    case KappaSource::generic_bound: return "generic-bound";
    case KappaSource::estimated: return "estimated";
  }
  return "?";
}

/// E|X|^p in closed form for the built-in kinds.
inline double absolute_moment(EnsembleKind kind, double p) {
  switch (kind) {
    case EnsembleKind::gaussian:
      return std::exp(0.5 * p * std::numbers::ln2 + std::lgamma(0.5 * (p + 1.0)) -
                      0.5 * std::log(std::numbers::pi));
    case EnsembleKind::rademacher:
      return 1.0;
    case EnsembleKind::bounded_uniform:
      // uniform on [-sqrt3, sqrt3]
      return std::pow(std::numbers::sqrt3, p) / (p + 1.0);
  }
  return 0.0;
}

/// psi2 norm sup_p p^{-1/2} (E|X|^p)^{1/p}, maximised over p in {1, ..., p_max}.
inline double psi2_norm(EnsembleKind kind, int p_max = 64) {
  if (p_max < 1) throw std::invalid_argument("psi2_norm: p_max must be >= 1");
  double best = 0.0;
  for (int p = 1; p <= p_max; ++p) {
    const double pd = static_cast<double>(p);
    const double v = std::exp(std::log(absolute_moment(kind, pd)) / pd) / std::sqrt(pd);
    best = std::max(best, v);
  }
  return best;
}

/// Generic Berry-Esseen bound 9 sqrt(27) alpha^3.
inline double generic_kappa_bound(double alpha) {
  return 9.0 * std::sqrt(27.0) * alpha * alpha * alpha;
}

inline double draw(EnsembleKind kind, Rng& rng) {
  switch (kind) {
    case EnsembleKind::gaussian: return rng.normal();
    case EnsembleKind::rademacher: return rng.sign();
    case EnsembleKind::bounded_uniform:
      return std::numbers::sqrt3 * (2.0 * rng.uniform() - 1.0);
  }
  return 0.0;
}

/// A symmetric unit-variance sub-Gaussian distribution together with its
/// psi2 norm `alpha` and Berry-Esseen constant `kappa_sg`.
struct Ensemble {
  EnsembleKind kind = EnsembleKind::gaussian;
  double alpha = kSqrt2OverPi;
  double kappa_sg = 0.0;
  KappaSource kappa_source = KappaSource::exact_zero;

  static Ensemble make(EnsembleKind kind);
  static Ensemble make(EnsembleKind kind, KappaSource source, std::size_t samples = 20000,
                       std::uint64_t seed = 0);
};

/// Row-major M x N matrix of i.i.d. ensemble draws.
struct SensingMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> entries;
  Ensemble ensemble;
  std::uint64_t seed = 0;

  std::span<const double> row(std::size_t i) const {
    return {entries.data() + i * cols, cols};
  }
  double operator()(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }
};

/// Draws the matrix row by row from a single stream; bit-reproducible from
/// (ensemble, m, n, seed).
inline SensingMatrix sample_matrix(const Ensemble& ensemble, std::size_t m, std::size_t n,
                                   std::uint64_t seed) {
  if (m == 0 || n == 0) throw std::invalid_argument("sample_matrix: zero dimension");
  SensingMatrix out{m, n, std::vector<double>(m * n), ensemble, seed};
  Rng rng(seed);
  for (double& v : out.entries) v = draw(ensemble.kind, rng);
  return out;
}

/// mu_sg(u) = E|<phi, u>|. Exact for Gaussian ensembles (stderr 0).
inline Estimate mu_sg(const Ensemble& ensemble, std::span<const double> u, std::size_t samples,
                      std::uint64_t seed, unsigned jobs = 1) {
  const double norm = norm2(u);
  if (norm == 0.0) throw std::invalid_argument("mu_sg: zero vector");
  if (samples == 0) throw std::invalid_argument("mu_sg: samples must be >= 1");
  if (ensemble.kind == EnsembleKind::gaussian) return {kSqrt2OverPi * norm, 0.0, samples};
  return monte_carlo(samples, seed, jobs, [&](Rng& rng) {
    double s = 0.0;
    for (double uj : u) s += draw(ensemble.kind, rng) * uj;
    return std::abs(s);
  });
}

namespace detail {
__extension__ using uint128 = unsigned __int128;
}  // namespace detail

/// E|sum_{j<k0} phi_j| for Rademacher phi, by exact binomial enumeration.
/// Equals 2 E|beta - k0/2| with beta ~ Bin(k0, 1/2).
inline double mu_sg_exact_binomial(std::size_t k0) {
  if (k0 == 0) throw std::invalid_argument("mu_sg_exact_binomial: k0 must be >= 1");
  if (k0 <= 120) {
    // sum_k C(k0,k) |2k - k0| as an exact integer, then one division by 2^k0.
    detail::uint128 binom = 1;
    detail::uint128 total = 0;
    for (std::size_t k = 0; k <= k0; ++k) {
      const auto dev = static_cast<detail::uint128>(2 * k >= k0 ? 2 * k - k0 : k0 - 2 * k);
      total += binom * dev;
      binom = binom * (k0 - k) / (k + 1);
    }
    return static_cast<double>(std::ldexp(static_cast<long double>(total), -static_cast<int>(k0)));
  }
  const double n = static_cast<double>(k0);
  long double total = 0.0L;
  for (std::size_t k = 0; k <= k0; ++k) {
    const double kd = static_cast<double>(k);
    const long double logp = std::lgamma(n + 1.0) - std::lgamma(kd + 1.0) -
                             std::lgamma(n - kd + 1.0) - n * std::numbers::ln2;
    total += std::exp(logp) * std::abs(2.0L * kd - n);
  }
  return static_cast<double>(total);
}

namespace detail {

/// int_0^inf |S(t) - P(|g| >= t)| dt where S is the empirical tail of the
/// sorted sample `s` (nonnegative values). Integrated exactly piecewise.
inline double tail_gap_sorted(std::span<const double> s) {
  const double n = static_cast<double>(s.size());
  // antiderivative of P(|g| >= t)
  auto G = [](double t) { return t * two_sided_normal_tail(t) - 2.0 * normal_pdf(t); };
  auto T = [](double t) { return two_sided_normal_tail(t); };
  auto piece = [&](double l, double r, double c) {
    if (!(r > l)) return 0.0;
    if (c >= T(l)) return c * (r - l) - (G(r) - G(l));
    if (c <= T(r)) return (G(r) - G(l)) - c * (r - l);
    double lo = l, hi = r;
    for (int it = 0; it < 100 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (T(mid) > c ? lo : hi) = mid;
    }
    const double x = 0.5 * (lo + hi);
    return (G(x) - G(l)) - c * (x - l) + c * (r - x) - (G(r) - G(x));
  };
  double total = 0.0;
  double left = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    total += piece(left, s[j], (n - static_cast<double>(j)) / n);
    left = std::max(left, s[j]);
  }
  total += -G(left);  // empirical tail is 0 beyond the largest sample
  return total;
}

}  // namespace detail

/// Estimates int_0^inf |P(|<phi,u>| >= t) - P(|<g,u>| >= t)| dt for unit u.
/// The empirical tail of |<phi,u>| is integrated exactly against the
/// Gaussian tail; the standard error comes from 10 contiguous batches.
/// Gaussian ensembles return exactly 0.
inline Estimate berry_esseen_gap(const Ensemble& ensemble, std::span<const double> u,
                                 std::size_t samples, std::uint64_t seed, unsigned jobs = 1) {
  if (std::abs(norm2(u) - 1.0) > 1e-9)
    throw std::invalid_argument("berry_esseen_gap: u must have unit norm");
  if (ensemble.kind == EnsembleKind::gaussian) return {0.0, 0.0, samples};
  constexpr std::size_t kBatches = 10;
  samples = std::max(samples, kBatches * 2);
  std::vector<double> values(samples);
  const std::size_t chunks = (samples + kMonteCarloChunk - 1) / kMonteCarloChunk;
  parallel_for(chunks, jobs, [&](std::size_t c) {
    Rng rng(derive_seed(seed, {c}));
    const std::size_t end = std::min(samples, (c + 1) * kMonteCarloChunk);
    for (std::size_t i = c * kMonteCarloChunk; i < end; ++i) {
      double s = 0.0;
      for (double uj : u) s += draw(ensemble.kind, rng) * uj;
      values[i] = std::abs(s);
    }
  });
  MeanAccumulator batches;
  const std::size_t per = samples / kBatches;
  for (std::size_t b = 0; b < kBatches; ++b) {
    std::vector<double> part(values.begin() + static_cast<std::ptrdiff_t>(b * per),
                             values.begin() + static_cast<std::ptrdiff_t>((b + 1) * per));
    std::sort(part.begin(), part.end());
    batches.add(detail::tail_gap_sorted(part));
  }
  std::sort(values.begin(), values.end());
  const double gap = detail::tail_gap_sorted(values);
  return {gap, std::sqrt(batches.variance() / static_cast<double>(kBatches)), samples};
}

/// Refined kappa_sg: the largest gap/||u||_inf (+3 stderr) over the flat
/// sparse unit vectors ones(k)/sqrt(k), k = 1..8, which are the worst cases
/// for the Berry-Esseen ratio.
inline double estimate_kappa(EnsembleKind kind, std::size_t samples, std::uint64_t seed) {
  if (kind == EnsembleKind::gaussian) return 0.0;
  const Ensemble probe{kind, psi2_norm(kind), 0.0, KappaSource::estimated};
  double best = 0.0;
  for (std::size_t k = 1; k <= 8; ++k) {
    const Vector u(k, 1.0 / std::sqrt(static_cast<double>(k)));
    const Estimate g = berry_esseen_gap(probe, u, samples, derive_seed(seed, {k}));
    best = std::max(best, (g.mean + 3.0 * g.std_error) / norm_inf(u));
  }
  return best;
}

inline Ensemble Ensemble::make(EnsembleKind kind) {
  return make(kind, kind == EnsembleKind::gaussian ? KappaSource::exact_zero
                                                   : KappaSource::generic_bound);
}

inline Ensemble Ensemble::make(EnsembleKind kind, KappaSource source, std::size_t samples,
                               std::uint64_t seed) {
  Ensemble e;
  e.kind = kind;
  e.alpha = psi2_norm(kind);
  if (kind == EnsembleKind::gaussian) {
    e.kappa_source = KappaSource::exact_zero;
    e.kappa_sg = 0.0;
    return e;
  }
  switch (source) {
    case KappaSource::exact_zero:
      throw std::invalid_argument("exact-zero kappa is only valid for the Gaussian ensemble");
    case KappaSource::generic_bound:
      e.kappa_sg = generic_kappa_bound(e.alpha);
      break;
    case KappaSource::estimated:
      e.kappa_sg = estimate_kappa(kind, samples, seed);
      break;
  }
  e.kappa_source = source;
  return e;
}

/// Empirical tails P(|X| > eps) on a grid, with the largest rate c such that
/// tail(eps) <= C exp(-c eps^2 / alpha^2) holds on every grid point for the
/// fixed prefactor C.
struct TailFit {
  std::vector<double> eps;
  std::vector<double> tail;
  double prefactor = 2.0;
  double rate = 0.0;
};

inline TailFit fit_tail_bound(const Ensemble& ensemble, std::span<const double> eps_grid,
                              std::size_t samples, std::uint64_t seed, double prefactor = 2.0) {
  TailFit fit;
  fit.eps.assign(eps_grid.begin(), eps_grid.end());
  fit.prefactor = prefactor;
  Rng rng(seed);
  std::vector<double> xs(samples);
  for (double& x : xs) x = std::abs(draw(ensemble.kind, rng));
  std::sort(xs.begin(), xs.end());
  fit.rate = std::numeric_limits<double>::infinity();
  for (double e : fit.eps) {
    const auto above = xs.end() - std::upper_bound(xs.begin(), xs.end(), e);
    const double tail = static_cast<double>(above) / static_cast<double>(samples);
    fit.tail.push_back(tail);
    if (tail > 0.0 && e > 0.0) {
      const double c = -std::log(tail / prefactor) * ensemble.alpha * ensemble.alpha / (e * e);
      fit.rate = std::min(fit.rate, c);
    }
  }
  return fit;
}

}  // namespace qembed
