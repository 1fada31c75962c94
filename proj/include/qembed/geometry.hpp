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

// Low-complexity sets: sampling, membership, exact support functions,
// Gaussian mean width, entropy bounds, anti-sparsity and the minimal number
// of measurements the embedding results ask for.

#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qembed/parallel.hpp"
#include "qembed/random.hpp"
#include "qembed/vector_ops.hpp"

namespace qembed {

/// Square orthonormal basis, row-major; column j is atom j, so a point with
/// coefficients z is Psi z and the analysis map is Psi^T x.
struct Basis {
  std::size_t n = 0;
  std::vector<double> entries;

  double operator()(std::size_t i, std::size_t j) const { return entries[i * n + j]; }

  Vector synthesize(std::span<const double> z) const {
    Vector x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += (*this)(i, j) * z[j];
      x[i] = s;
    }
    return x;
  }

  Vector analyze(std::span<const double> x) const {
    Vector z(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) z[j] += (*this)(i, j) * x[i];
    return z;
  }
};

/// Orthonormal DCT-II as a Basis whose rows are the cosine atoms, so that
/// Psi u is the DCT of u.
inline Basis dct2_basis(std::size_t n) {
  if (n == 0) throw std::invalid_argument("dct2_basis: n must be >= 1");
  Basis b{n, std::vector<double>(n * n)};
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / nd);
    for (std::size_t j = 0; j < n; ++j)
      b.entries[k * n + j] =
          s * std::cos(std::numbers::pi * (static_cast<double>(j) + 0.5) * static_cast<double>(k) / nd);
  }
  return b;
}

struct FiniteSet {
  std::vector<Vector> points;
};

/// K-sparse vectors (in `basis`, identity when absent) of norm <= radius.
struct SparseBall {
  std::size_t n = 1;
  std::size_t k = 1;
  double radius = 1.0;
  std::optional<Basis> basis;
};

/// rows x cols matrices (flattened row-major) of rank <= rank and Frobenius
/// norm <= radius.
struct LowRankBall {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t rank = 1;
  double radius = 1.0;
};

struct EuclideanBall {
  std::size_t n = 1;
  double radius = 1.0;
};

using SetSpec = std::variant<FiniteSet, SparseBall, LowRankBall, EuclideanBall>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline std::size_t ambient_dim(const SetSpec& set) {
  return std::visit(overloaded{
                        [](const FiniteSet& s) { return s.points.empty() ? 0 : s.points.front().size(); },
                        [](const SparseBall& s) { return s.n; },
                        [](const LowRankBall& s) { return s.rows * s.cols; },
                        [](const EuclideanBall& s) { return s.n; },
                    },
                    set);
}

/// ||K|| = sup of the norm over the set.
inline double diameter(const SetSpec& set) {
  return std::visit(overloaded{
                        [](const FiniteSet& s) {
                          double d = 0.0;
                          for (const auto& p : s.points) d = std::max(d, norm2(p));
                          return d;
                        },
                        [](const auto& ball) { return ball.radius; },
                    },
                    set);
}

inline void validate(const SetSpec& set) {
  std::visit(overloaded{
                 [](const FiniteSet& s) {
                   if (s.points.empty()) throw std::invalid_argument("FiniteSet: no points");
                   const auto n = s.points.front().size();
                   if (n == 0) throw std::invalid_argument("FiniteSet: zero dimension");
                   for (const auto& p : s.points)
                     if (p.size() != n) throw std::invalid_argument("FiniteSet: ragged points");
                 },
                 [](const SparseBall& s) {
                   if (s.n == 0 || s.k == 0 || s.k > s.n || !(s.radius > 0.0))
                     throw std::invalid_argument("SparseBall: need 1 <= K <= N and radius > 0");
                   if (s.basis && s.basis->n != s.n)
                     throw std::invalid_argument("SparseBall: basis size must equal N");
                 },
                 [](const LowRankBall& s) {
                   if (s.rows == 0 || s.cols == 0 || s.rank == 0 ||
                       s.rank > std::min(s.rows, s.cols) || !(s.radius > 0.0))
                     throw std::invalid_argument("LowRankBall: need 1 <= r <= min(N1, N2) and radius > 0");
                 },
                 [](const EuclideanBall& s) {
                   if (s.n == 0 || !(s.radius > 0.0))
                     throw std::invalid_argument("EuclideanBall: need N >= 1 and radius > 0");
                 },
             },
             set);
}

namespace detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::VectorXd singular_values(std::span<const double> flat, std::size_t rows,
                                       std::size_t cols) {
  const Eigen::Map<const RowMajor> g(flat.data(), static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(cols));
  return Eigen::JacobiSVD<Eigen::MatrixXd>(g).singularValues();
}

inline std::vector<std::size_t> random_support(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

/// A random point of the set. Sparse and low-rank points get a norm uniform
/// in [0, radius]; Euclidean-ball points are uniform in the ball.
inline Vector sample_point(const SetSpec& set, Rng& rng) {
  validate(set);
  return std::visit(
      overloaded{
          [&](const FiniteSet& s) { return s.points[rng.index(s.points.size())]; },
          [&](const SparseBall& s) {
            Vector z(s.n, 0.0);
            double nz = 0.0;
            const auto support = detail::random_support(s.n, s.k, rng);
            while (nz == 0.0) {
              for (auto j : support) z[j] = rng.normal();
              nz = norm2(z);
            }
            const double r = s.radius * rng.uniform() / nz;
            for (double& v : z) v *= r;
            return s.basis ? s.basis->synthesize(z) : z;
          },
          [&](const LowRankBall& s) {
            std::vector<double> u(s.rows * s.rank), v(s.cols * s.rank);
            for (double& e : u) e = rng.normal();
            for (double& e : v) e = rng.normal();
            Vector x(s.rows * s.cols, 0.0);
            for (std::size_t i = 0; i < s.rows; ++i)
              for (std::size_t j = 0; j < s.cols; ++j) {
                double acc = 0.0;
                for (std::size_t l = 0; l < s.rank; ++l) acc += u[i * s.rank + l] * v[j * s.rank + l];
                x[i * s.cols + j] = acc;
              }
            const double nx = norm2(x);
            const double r = nx > 0.0 ? s.radius * rng.uniform() / nx : 0.0;
            for (double& e : x) e *= r;
            return x;
          },
          [&](const EuclideanBall& s) {
            Vector g(s.n);
            double ng = 0.0;
            while (ng == 0.0) {
              for (double& e : g) e = rng.normal();
              ng = norm2(g);
            }
            const double r =
                s.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(s.n)) / ng;
            for (double& e : g) e *= r;
            return g;
          },
      },
      set);
}

inline Vector sample_point(const SetSpec& set, std::uint64_t seed) {
  Rng rng(seed);
  return sample_point(set, rng);
}

/// Membership up to a relative tolerance.
inline bool contains(const SetSpec& set, std::span<const double> x, double tol = 1e-9) {
  if (x.size() != ambient_dim(set)) return false;
  const double slack = tol * std::max(1.0, diameter(set));
  return std::visit(
      overloaded{
          [&](const FiniteSet& s) {
            return std::any_of(s.points.begin(), s.points.end(),
                               [&](const Vector& p) { return norm2(difference(p, x)) <= slack; });
          },
          [&](const SparseBall& s) {
            const Vector z = s.basis ? s.basis->analyze(x) : Vector(x.begin(), x.end());
            const auto nnz = std::count_if(z.begin(), z.end(), [&](double v) { return std::abs(v) > slack; });
            return static_cast<std::size_t>(nnz) <= s.k && norm2(z) <= s.radius + slack;
          },
          [&](const LowRankBall& s) {
            const auto sv = detail::singular_values(x, s.rows, s.cols);
            std::size_t rank = 0;
            for (Eigen::Index i = 0; i < sv.size(); ++i)
              if (sv[i] > slack) ++rank;
            return rank <= s.rank && norm2(x) <= s.radius + slack;
          },
          [&](const EuclideanBall& s) { return norm2(x) <= s.radius + slack; },
      },
      set);
}

/// sup_{u in K} |<g, u>| in closed form.
inline double sup_oracle(const SetSpec& set, std::span<const double> g) {
  if (g.size() != ambient_dim(set)) throw std::invalid_argument("sup_oracle: dimension mismatch");
  return std::visit(
      overloaded{
          [&](const FiniteSet& s) {
            double best = 0.0;
            for (const auto& p : s.points) best = std::max(best, std::abs(dot(g, p)));
            return best;
          },
          [&](const SparseBall& s) {
            Vector c = s.basis ? s.basis->analyze(g) : Vector(g.begin(), g.end());
            for (double& v : c) v *= v;
            std::nth_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(s.k - 1), c.end(),
                             std::greater<>());
            // sum the K largest squares in a fixed order
            std::sort(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(s.k), std::greater<>());
            double acc = 0.0;
            for (std::size_t i = 0; i < s.k; ++i) acc += c[i];
            return s.radius * std::sqrt(acc);
          },
          [&](const LowRankBall& s) {
            const auto sv = detail::singular_values(g, s.rows, s.cols);
            double acc = 0.0;
            for (std::size_t i = 0; i < s.rank && i < static_cast<std::size_t>(sv.size()); ++i)
              acc += sv[static_cast<Eigen::Index>(i)] * sv[static_cast<Eigen::Index>(i)];
            return s.radius * std::sqrt(acc);
          },
          [&](const EuclideanBall& s) { return s.radius * norm2(g); },
      },
      set);
}

struct WidthEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

/// Gaussian mean width w(K) = E sup_{u in K} |<g, u>|, Monte Carlo over g
/// with the exact inner supremum.
inline WidthEstimate width_estimate(const SetSpec& set, std::size_t draws, std::uint64_t seed,
                                    unsigned jobs = 1) {
  validate(set);
  if (draws < 2) throw std::invalid_argument("width_estimate: draws must be >= 2");
  const std::size_t n = ambient_dim(set);
  const Estimate e = monte_carlo(draws, seed, jobs, [&](Rng& rng) {
    Vector g(n);
    for (double& v : g) v = rng.normal();
    return sup_oracle(set, g);
  });
  return {e.mean, e.std_error, e.samples};
}

/// lambda * K.
inline SetSpec scale_set(const SetSpec& set, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("scale_set: lambda must be positive");
  return std::visit(overloaded{
                        [&](const FiniteSet& s) -> SetSpec {
                          FiniteSet out;
                          for (const auto& p : s.points) out.points.push_back(scaled(p, lambda));
                          return out;
                        },
                        [&](auto ball) -> SetSpec {
                          ball.radius *= lambda;
                          return ball;
                        },
                    },
                    set);
}

/// Width-property diagnostics computed from one common stream of Gaussian
/// draws: homogeneity, the diameter sandwich and (finite sets) translation.
struct WidthPropertiesReport {
  double width = 0.0;
  double width_std_error = 0.0;
  /// sup(lambda K, g) == lambda * sup(K, g) bit for bit on every draw
  bool homogeneity_exact = true;
  double homogeneity_max_rel_error = 0.0;
  double diameter_lower = 0.0;  ///< sqrt(2/pi) ||K||
  double diameter_upper = 0.0;  ///< sqrt(N) ||K||
  bool diameter_link_holds = false;
  std::optional<double> translation_gap;    ///< |w(K + {t}) - w(K)|
  std::optional<double> translation_bound;  ///< sqrt(2/pi) ||t|| + 3 stderr
  bool translation_holds = true;

  bool holds() const { return diameter_link_holds && translation_holds; }
};

inline WidthPropertiesReport width_properties_check(const SetSpec& set, double lambda,
                                                    std::span<const double> shift,
                                                    std::size_t draws, std::uint64_t seed) {
  validate(set);
  if (draws < 2) throw std::invalid_argument("width_properties_check: draws must be >= 2");
  const std::size_t n = ambient_dim(set);
  const SetSpec big = scale_set(set, lambda);
  std::optional<SetSpec> moved;
  if (const auto* fs = std::get_if<FiniteSet>(&set); fs && !shift.empty()) {
    if (shift.size() != n) throw std::invalid_argument("width_properties_check: shift dimension");
    FiniteSet t;
    for (const auto& p : fs->points) t.points.push_back(sum(p, shift));
    moved = std::move(t);
  }
  WidthPropertiesReport r;
  MeanAccumulator width, gap;
  Rng rng(seed);
  Vector g(n);
  for (std::size_t d = 0; d < draws; ++d) {
    for (double& v : g) v = rng.normal();
    const double s = sup_oracle(set, g);
    const double sl = sup_oracle(big, g);
    if (sl != lambda * s) r.homogeneity_exact = false;
    if (s > 0.0)
      r.homogeneity_max_rel_error = std::max(r.homogeneity_max_rel_error, std::abs(sl - lambda * s) / (lambda * s));
    width.add(s);
    if (moved) gap.add(sup_oracle(*moved, g) - s);
  }
  const auto w = width.estimate();
  r.width = w.mean;
  r.width_std_error = w.std_error;
  const double d = diameter(set);
  r.diameter_lower = kSqrt2OverPi * d;
  r.diameter_upper = std::sqrt(static_cast<double>(n)) * d;
  r.diameter_link_holds = r.diameter_lower <= w.mean + 3.0 * w.std_error &&
                          w.mean <= r.diameter_upper + 3.0 * w.std_error;
  if (moved) {
    const auto gp = gap.estimate();
    r.translation_gap = std::abs(gp.mean);
    r.translation_bound = kSqrt2OverPi * norm2(shift) + 3.0 * gp.std_error;
    r.translation_holds = *r.translation_gap <= *r.translation_bound;
  }
  return r;
}

/// Structured-set width proxy w_bar(K)^2: K log(2N/K) for sparse balls and
/// r(N1 + N2) for low-rank balls. Other sets are not structured.
inline std::optional<double> w_bar_squared(const SetSpec& set) {
  if (const auto* s = std::get_if<SparseBall>(&set))
    return static_cast<double>(s->k) * std::log(2.0 * static_cast<double>(s->n) / static_cast<double>(s->k));
  if (const auto* s = std::get_if<LowRankBall>(&set))
    return static_cast<double>(s->rank) * static_cast<double>(s->rows + s->cols);
  return std::nullopt;
}

/// Upper bound on the Kolmogorov eta-entropy H(K, eta).
///   sparse ball:  K log(eN/K (1 + 2d/eta))
///   finite set:   min(log |S|, w(K)^2 / eta^2)
///   otherwise:    w(K)^2 / eta^2 (Sudakov, unit constant)
inline double entropy_bound(const SetSpec& set, double eta, std::size_t draws = 4000,
                            std::uint64_t seed = 0) {
  validate(set);
  if (!(eta > 0.0)) throw std::invalid_argument("entropy_bound: eta must be positive");
  if (const auto* s = std::get_if<SparseBall>(&set)) {
    const double k = static_cast<double>(s->k), n = static_cast<double>(s->n);
    return k * std::log(std::numbers::e * n / k * (1.0 + 2.0 * s->radius / eta));
  }
  const double w = width_estimate(set, draws, seed).mean;
  const double sudakov = w * w / (eta * eta);
  if (const auto* s = std::get_if<FiniteSet>(&set))
    return std::min(std::log(static_cast<double>(s->points.size())), sudakov);
  return sudakov;
}

/// Tabulated entropy bound against w_bar^2 log(1 + d/eta). `constant` is the
/// smallest factor c with H(K, eta) <= c w_bar^2 log(1 + d/eta) on the grid.
struct StructuredConstants {
  double w_bar_sq_bound = 0.0;
  std::vector<double> eta;
  std::vector<double> entropy;
  std::vector<double> envelope;
  double constant = 0.0;
};

inline StructuredConstants structured_constants(const SetSpec& set, std::span<const double> eta_grid) {
  const auto wb = w_bar_squared(set);
  if (!wb) throw std::invalid_argument("structured_constants: set is not structured");
  StructuredConstants sc;
  sc.w_bar_sq_bound = *wb;
  const double d = diameter(set);
  for (double eta : eta_grid) {
    const double h = entropy_bound(set, eta);
    const double env = *wb * std::log1p(d / eta);
    sc.eta.push_back(eta);
    sc.entropy.push_back(h);
    sc.envelope.push_back(env);
    sc.constant = std::max(sc.constant, h / env);
  }
  return sc;
}

/// Greedy farthest-point eta-cover of a point cloud.
struct EmpiricalNet {
  std::vector<std::size_t> indices;
  std::vector<Vector> points;
  double log_size = 0.0;
  double cover_radius = 0.0;  ///< max distance from an input point to the net
};

inline EmpiricalNet empirical_net(std::span<const Vector> points, double eta) {
  if (points.empty()) throw std::invalid_argument("empirical_net: empty point list");
  if (!(eta >= 0.0)) throw std::invalid_argument("empirical_net: eta must be nonnegative");
  std::vector<double> dist(points.size(), std::numeric_limits<double>::infinity());
  EmpiricalNet net;
  std::size_t next = 0;
  for (;;) {
    const std::size_t center = next;
    net.indices.push_back(center);
    net.points.push_back(points[center]);
    double far = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      dist[i] = std::min(dist[i], norm2(difference(points[i], points[center])));
      if (dist[i] > far) {
        far = dist[i];
        next = i;
      }
    }
    net.cover_radius = far;
    if (far <= eta) break;
  }
  net.log_size = std::log(static_cast<double>(net.indices.size()));
  return net;
}

/// Anti-sparsity level ||u||^2 / ||u||_inf^2 in [1, dim u].
struct AntiSparsityReport {
  double level = 0.0;
  double k0 = 0.0;
  bool passed = false;
};

inline double anti_sparsity_level(std::span<const double> u) {
  const double inf = norm_inf(u);
  if (inf == 0.0) throw std::invalid_argument("anti_sparsity: zero vector");
  const double n = norm2(u) / inf;
  return n * n;
}

inline AntiSparsityReport anti_sparsity(std::span<const double> u, double k0) {
  const double level = anti_sparsity_level(u);
  return {level, k0, level >= k0};
}

struct RotationReport {
  Vector v;
  double level_before = 0.0;
  double level_after = 0.0;
};

/// v = Psi0 u with Psi0 the orthonormal DCT-II.
inline RotationReport rotate_antisparsify(std::span<const double> u) {
  RotationReport r;
  r.level_before = anti_sparsity_level(u);
  const Basis psi = dct2_basis(u.size());
  r.v.assign(u.size(), 0.0);
  for (std::size_t k = 0; k < u.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) s += psi(k, j) * u[j];
    r.v[k] = s;
  }
  r.level_after = anti_sparsity_level(r.v);
  return r;
}

enum class RequirementKind { embed_general, embed_structured, width_general, width_structured };

/// Unrounded c * (sample-complexity formula).
///   embed-general:    w^2 / (delta^2 eps^5)
///   embed-structured: eps^-2 wbar^2 log(1 + ||K|| / (delta eps^{3/2}))
///   width-general:    (2 + delta)^4 w^2 / (delta^2 eps^4)
///   width-structured: ((2 + delta)/eps) wbar^2 log(1 + (2 + delta)^{3/2} ||K|| / (delta eps^{3/2}))
/// General kinds use a Monte Carlo width with `draws` Gaussian draws.
inline double minimal_m_value(const SetSpec& set, RequirementKind kind, double eps, double delta,
                              double c_const, std::size_t draws = 4000, std::uint64_t seed = 0) {
  validate(set);
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("minimal_m: eps must lie in (0, 1)");
  if (!(delta > 0.0)) throw std::invalid_argument("minimal_m: delta must be positive");
  if (!(c_const > 0.0)) throw std::invalid_argument("minimal_m: constant must be positive");
  const double d = diameter(set);
  const bool structured =
      kind == RequirementKind::embed_structured || kind == RequirementKind::width_structured;
  double w2 = 0.0;
  if (structured) {
    const auto wb = w_bar_squared(set);
    if (!wb) throw std::invalid_argument("minimal_m: structured requirement on a non-structured set");
    w2 = *wb;
  } else {
    const double w = width_estimate(set, draws, seed).mean;
    w2 = w * w;
  }
  const double e32 = std::pow(eps, 1.5);
  switch (kind) {
    case RequirementKind::embed_general:
      return c_const * w2 / (delta * delta * std::pow(eps, 5.0));
    case RequirementKind::embed_structured:
      return c_const * w2 / (eps * eps) * std::log1p(d / (delta * e32));
    case RequirementKind::width_general:
      return c_const * std::pow(2.0 + delta, 4.0) * w2 / (delta * delta * std::pow(eps, 4.0));
    case RequirementKind::width_structured:
      return c_const * (2.0 + delta) / eps * w2 *
             std::log1p(std::pow(2.0 + delta, 1.5) * d / (delta * e32));
  }
  return 0.0;
}

inline std::size_t minimal_m(const SetSpec& set, RequirementKind kind, double eps, double delta,
                             double c_const, std::size_t draws = 4000, std::uint64_t seed = 0) {
  const double v = std::ceil(minimal_m_value(set, kind, eps, delta, c_const, draws, seed));
  if (!(v < 0x1.0p63)) throw std::invalid_argument("minimal_m: requirement overflows");
  return static_cast<std::size_t>(std::max(1.0, v));
}

}  // namespace qembed
