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

// Uniform scalar quantization, uniform dithering and the frozen quantized
// map A(x) = Q(Phi x + xi).

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qembed/ensembles.hpp"
#include "qembed/parallel.hpp"
#include "qembed/random.hpp"

namespace qembed {

/// Floor: Q(t) = delta floor(t/delta). Round: Q(t) = delta floor(t/delta + 1/2),
/// with ties going up.
enum class QuantizerVariant { floor, round };

struct QuantizerConfig {
  double delta = 1.0;
  QuantizerVariant variant = QuantizerVariant::floor;
};

/// Offset of the first threshold: thresholds sit at k*delta for Floor and at
/// (k - 1/2)*delta for Round.
inline double threshold_offset(const QuantizerConfig& cfg) {
  return cfg.variant == QuantizerVariant::round ? -0.5 * cfg.delta : 0.0;
}

/// Bin index of t. The returned k is the largest integer whose lower
/// threshold, evaluated in double precision, is <= t; in particular
/// quantize(k*delta) == k exactly for the Floor variant.
inline std::int64_t quantize(const QuantizerConfig& cfg, double t) {
  if (!(cfg.delta > 0.0)) throw std::invalid_argument("quantize: delta must be positive");
  if (!std::isfinite(t)) throw std::invalid_argument("quantize: non-finite input");
  const double shift = cfg.variant == QuantizerVariant::round ? 0.5 : 0.0;
  const double scaled = t / cfg.delta + shift;
  if (std::abs(scaled) > 0x1.0p62) throw std::invalid_argument("quantize: input out of range");
  auto lower = [&](std::int64_t k) { return (static_cast<double>(k) - shift) * cfg.delta; };
  auto k = static_cast<std::int64_t>(std::floor(scaled));
  while (lower(k) > t) --k;
  while (lower(k + 1) <= t) ++k;
  return k;
}

/// True when t lies within 1e-12*delta of a threshold. Such ties have measure
/// zero under dithering; they are reported, never perturbed.
inline bool near_threshold(const QuantizerConfig& cfg, double t) {
  const double shift = cfg.variant == QuantizerVariant::round ? 0.5 : 0.0;
  const double s = t / cfg.delta + shift;
  return std::abs(s - std::nearbyint(s)) <= 1e-12;
}

/// Uniform dither values in [0, delta).
struct Dither {
  std::vector<double> values;
  std::uint64_t seed = 0;

  static Dither sample(std::size_t m, double delta, std::uint64_t seed) {
    if (!(delta > 0.0)) throw std::invalid_argument("Dither: delta must be positive");
    Dither d{std::vector<double>(m), seed};
    Rng rng(seed);
    for (double& v : d.values) {
      v = delta * rng.uniform();
      if (v >= delta) v = std::nextafter(delta, 0.0);
    }
    return d;
  }
};

/// A(x) / delta: one integer per measurement.
struct QuantizedCode {
  std::vector<std::int64_t> values;
  /// Number of coordinates whose input fell within 1e-12*delta of a threshold.
  std::size_t near_ties = 0;

  bool operator==(const QuantizedCode& o) const { return values == o.values; }
};

/// Frozen instance of A(x) = Q(Phi x + xi). Immutable; apply() is safe to
/// call concurrently.
class QuantizedMap {
 public:
  QuantizedMap(SensingMatrix matrix, std::optional<Dither> dither, QuantizerConfig quantizer)
      : matrix_(std::move(matrix)), dither_(std::move(dither)), quantizer_(quantizer) {
    if (!(quantizer_.delta > 0.0)) throw std::invalid_argument("QuantizedMap: delta must be positive");
    if (dither_ && dither_->values.size() != matrix_.rows)
      throw std::invalid_argument("QuantizedMap: dither length must equal the row count");
  }

  /// Dithered Floor map with Phi ~ ensemble and xi ~ U([0, delta)), both
  /// derived from `seed`.
  static QuantizedMap sample(const Ensemble& ensemble, std::size_t m, std::size_t n, double delta,
                             std::uint64_t seed, bool dithered = true,
                             QuantizerVariant variant = QuantizerVariant::floor) {
    auto phi = sample_matrix(ensemble, m, n, derive_seed(seed, {0}));
    std::optional<Dither> xi;
    if (dithered) xi = Dither::sample(m, delta, derive_seed(seed, {1}));
    return QuantizedMap(std::move(phi), std::move(xi), {delta, variant});
  }

  const SensingMatrix& matrix() const noexcept { return matrix_; }
  const std::optional<Dither>& dither() const noexcept { return dither_; }
  const QuantizerConfig& quantizer() const noexcept { return quantizer_; }
  double delta() const noexcept { return quantizer_.delta; }
  std::size_t rows() const noexcept { return matrix_.rows; }
  std::size_t cols() const noexcept { return matrix_.cols; }

  /// Phi x (no dither). Each row is summed left to right over the nonzero
  /// entries of x, which gives the same bits as the full sum.
  std::vector<double> project_linear(std::span<const double> x) const {
    if (x.size() != matrix_.cols) throw std::invalid_argument("QuantizedMap: dimension mismatch");
    std::vector<std::size_t> support;
    for (std::size_t j = 0; j < x.size(); ++j)
      if (x[j] != 0.0) support.push_back(j);
    std::vector<double> out(matrix_.rows, 0.0);
    for (std::size_t i = 0; i < matrix_.rows; ++i) {
      const double* row = matrix_.entries.data() + i * matrix_.cols;
      double s = 0.0;
      for (std::size_t j : support) s += row[j] * x[j];
      out[i] = s;
    }
    return out;
  }

  /// Phi x + xi, the quantizer input.
  std::vector<double> project(std::span<const double> x) const {
    auto out = project_linear(x);
    if (dither_)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += dither_->values[i];
    return out;
  }

  QuantizedCode apply(std::span<const double> x) const {
    const auto p = project(x);
    QuantizedCode code;
    code.values.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      code.values[i] = quantize(quantizer_, p[i]);
      if (near_threshold(quantizer_, p[i])) ++code.near_ties;
    }
    return code;
  }

 private:
  SensingMatrix matrix_;
  std::optional<Dither> dither_;
  QuantizerConfig quantizer_;
};

/// Monte Carlo estimate of E|floor(x + xi) - floor(y + xi)| for xi ~ U([0,1)),
/// which equals |x - y|.
inline Estimate dithered_floor_mean(double x, double y, std::size_t samples, std::uint64_t seed,
                                    unsigned jobs = 1) {
  if (samples == 0) throw std::invalid_argument("dithered_floor_mean: samples must be >= 1");
  return monte_carlo(samples, seed, jobs, [x, y](Rng& rng) {
    const double xi = rng.uniform();
    return std::abs(std::floor(x + xi) - std::floor(y + xi));
  });
}

}  // namespace qembed
