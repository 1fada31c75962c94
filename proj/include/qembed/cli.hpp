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

// Command-line front end. `run` parses flags and an optional key=value
// configuration file, executes one subcommand, writes reports and returns
// 0 (pass), 1 (fail) or 2 (usage or configuration error).

#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qembed/acceptance.hpp"
#include "qembed/distances.hpp"
#include "qembed/ensembles.hpp"
#include "qembed/errors.hpp"
#include "qembed/experiments.hpp"
#include "qembed/geometry.hpp"
#include "qembed/oracles.hpp"
#include "qembed/quantizer.hpp"
#include "qembed/report.hpp"

namespace qembed::cli {

/// Bad flag, key or value. Maps to exit code 2.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw config_error(key + ": not a number: '" + v + "'");
}

inline std::uint64_t to_count(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw config_error(key + ": not a nonnegative integer: '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw config_error(key + ": out of range: '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw config_error(key + ": not a boolean: '" + v + "'");
}

/// Whitespace-separated numbers, one vector per line; blank lines and lines
/// starting with '#' are skipped.
inline std::vector<Vector> read_vectors(std::istream& is) {
  std::vector<Vector> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ls(t);
    Vector v;
    std::string tok;
    while (ls >> tok) v.push_back(to_double("line " + std::to_string(lineno), tok));
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<Vector> read_vectors(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot read " + path.string());
  return read_vectors(is);
}

/// "sparse:N=64,K=4,d=1[,basis=dct]", "ball:N=3,d=1",
/// "lowrank:N1=8,N2=8,r=2,d=1" or "finite:FILE".
inline SetSpec parse_set(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw config_error("set: expected KIND:PARAMS, got '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (kind == "finite") {
    FiniteSet s{read_vectors(std::filesystem::path(rest))};
    validate(s);
    return s;
  }
  std::map<std::string, std::string> kv;
  for (const auto& item : split(rest, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw config_error("set: expected NAME=VALUE, got '" + item + "'");
    kv[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  auto take = [&](const std::string& name, std::optional<std::string> fallback = std::nullopt) {
    auto it = kv.find(name);
    if (it == kv.end()) {
      if (fallback) return *fallback;
      throw config_error("set " + kind + ": missing parameter " + name);
    }
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  SetSpec set;
  if (kind == "sparse") {
    SparseBall s;
    s.n = to_count("set.N", take("N"));
    s.k = to_count("set.K", take("K"));
    s.radius = to_double("set.d", take("d", "1"));
    const std::string basis = take("basis", "identity");
    if (basis == "dct") s.basis = dct2_basis(s.n);
    else if (basis != "identity") throw config_error("set.basis: unknown basis '" + basis + "'");
    set = std::move(s);
  } else if (kind == "ball") {
    set = EuclideanBall{to_count("set.N", take("N")), to_double("set.d", take("d", "1"))};
  } else if (kind == "lowrank") {
    LowRankBall s;
    s.rows = to_count("set.N1", take("N1"));
    s.cols = to_count("set.N2", take("N2"));
    s.rank = to_count("set.r", take("r"));
    s.radius = to_double("set.d", take("d", "1"));
    set = s;
  } else {
    throw config_error("set: unknown kind '" + kind + "'");
  }
  if (!kv.empty()) throw config_error("set " + kind + ": unknown parameter " + kv.begin()->first);
  try {
    validate(set);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("set: ") + e.what());
  }
  return set;
}

inline EnsembleKind parse_ensemble(const std::string& v) {
  if (v == "gaussian") return EnsembleKind::gaussian;
  if (v == "rademacher" || v == "bernoulli") return EnsembleKind::rademacher;
  if (v == "uniform") return EnsembleKind::bounded_uniform;
  throw config_error("ensemble.name: unknown ensemble '" + v + "'");
}

inline KappaSource parse_kappa(const std::string& v) {
  if (v == "exact-zero") return KappaSource::exact_zero;
  if (v == "generic-bound" || v == "generic") return KappaSource::generic_bound;
  if (v == "estimated") return KappaSource::estimated;
  throw config_error("ensemble.kappa: unknown source '" + v + "'");
}

inline RequirementKind parse_requirement(const std::string& v) {
  if (v == "embed-general") return RequirementKind::embed_general;
  if (v == "embed-structured") return RequirementKind::embed_structured;
  if (v == "width-general") return RequirementKind::width_general;
  if (v == "width-structured") return RequirementKind::width_structured;
  throw config_error("experiment.requirement: unknown kind '" + v + "'");
}

/// Every setting with its default. Keys are "section.name".
struct RunConfig {
  std::string command;

  std::string set = "sparse:N=64,K=4,d=1";
  std::string ensemble = "gaussian";
  std::string kappa = "generic-bound";
  std::uint64_t kappa_samples = 20000;

  double delta = 1.0;
  std::string variant = "floor";
  bool dither = true;

  std::uint64_t seed = 0;
  std::uint64_t jobs = 1;
  std::uint64_t m = 256;
  std::string m_grid = "128,256,512,1024,2048";
  std::uint64_t pairs = 100;
  std::uint64_t trials = 10;
  double k0 = 1.0;
  bool k0_filter = true;
  double eps = 0.5;
  double t = 0.0;
  double s = 0.4;
  double eta = 0.1;
  std::string which = "all";
  std::uint64_t stirling_max = 10000;
  std::uint64_t mad_max = 40;
  std::uint64_t draws = 10000;
  std::string requirement = "embed-structured";
  double constant = 1.0;
  std::string slope_range;
  std::string input;

  std::string out = "qembed-out";

  using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

  static const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
      std::map<std::string, Setter> m;
      auto str = [](std::string RunConfig::*f) {
        return Setter([f](RunConfig& c, const std::string&, const std::string& v) { c.*f = v; });
      };
      auto num = [](double RunConfig::*f) {
        return Setter([f](RunConfig& c, const std::string& k, const std::string& v) { c.*f = to_double(k, v); });
      };
      auto cnt = [](std::uint64_t RunConfig::*f) {
        return Setter([f](RunConfig& c, const std::string& k, const std::string& v) { c.*f = to_count(k, v); });
      };
      auto flag = [](bool RunConfig::*f) {
        return Setter([f](RunConfig& c, const std::string& k, const std::string& v) { c.*f = to_bool(k, v); });
      };
      m["set.spec"] = str(&RunConfig::set);
      m["ensemble.name"] = str(&RunConfig::ensemble);
      m["ensemble.kappa"] = str(&RunConfig::kappa);
      m["ensemble.kappa_samples"] = cnt(&RunConfig::kappa_samples);
      m["quantizer.delta"] = num(&RunConfig::delta);
      m["quantizer.variant"] = str(&RunConfig::variant);
      m["quantizer.dither"] = flag(&RunConfig::dither);
      m["experiment.seed"] = cnt(&RunConfig::seed);
      m["experiment.jobs"] = cnt(&RunConfig::jobs);
      m["experiment.m"] = cnt(&RunConfig::m);
      m["experiment.m_grid"] = str(&RunConfig::m_grid);
      m["experiment.pairs"] = cnt(&RunConfig::pairs);
      m["experiment.trials"] = cnt(&RunConfig::trials);
      m["experiment.k0"] = num(&RunConfig::k0);
      m["experiment.k0_filter"] = flag(&RunConfig::k0_filter);
      m["experiment.eps"] = num(&RunConfig::eps);
      m["experiment.t"] = num(&RunConfig::t);
      m["experiment.s"] = num(&RunConfig::s);
      m["experiment.eta"] = num(&RunConfig::eta);
      m["experiment.which"] = str(&RunConfig::which);
      m["experiment.stirling_max"] = cnt(&RunConfig::stirling_max);
      m["experiment.mad_max"] = cnt(&RunConfig::mad_max);
      m["experiment.draws"] = cnt(&RunConfig::draws);
      m["experiment.requirement"] = str(&RunConfig::requirement);
      m["experiment.constant"] = num(&RunConfig::constant);
      m["experiment.slope_range"] = str(&RunConfig::slope_range);
      m["experiment.input"] = str(&RunConfig::input);
      m["output.dir"] = str(&RunConfig::out);
      return m;
    }();
    return table;
  }

  void set_key(const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw config_error("unknown configuration key '" + key + "'");
    it->second(*this, key, value);
  }

  /// Reads "[section]" headers and "name = value" lines; '#' and ';' start
  /// comments.
  void load(std::istream& is, const std::string& origin) {
    std::string section, line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find_first_of("#;");
      const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
      if (t.empty()) continue;
      const std::string where = origin + ":" + std::to_string(lineno) + ": ";
      if (t.front() == '[') {
        if (t.back() != ']') throw config_error(where + "malformed section header");
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw config_error(where + "expected name = value");
      if (section.empty()) throw config_error(where + "key outside of a section");
      const std::string key = section + "." + trim(t.substr(0, eq));
      try {
        set_key(key, trim(t.substr(eq + 1)));
      } catch (const config_error& e) {
        throw config_error(where + e.what());
      }
    }
  }

  void load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot read configuration " + path.string());
    load(is, path.string());
  }

  SetSpec set_spec() const { return parse_set(set); }

  Ensemble make_ensemble() const {
    const EnsembleKind kind = parse_ensemble(ensemble);
    const KappaSource src = parse_kappa(kappa);
    if (kind != EnsembleKind::gaussian && src == KappaSource::exact_zero)
      throw config_error("ensemble.kappa: exact-zero is only valid for the Gaussian ensemble");
    return Ensemble::make(kind, src, kappa_samples, derive_seed(seed, {0xE5}));
  }

  QuantizerVariant quantizer_variant() const {
    if (variant == "floor") return QuantizerVariant::floor;
    if (variant == "round") return QuantizerVariant::round;
    throw config_error("quantizer.variant: unknown variant '" + variant + "'");
  }

  std::vector<std::size_t> grid() const {
    std::vector<std::size_t> g;
    for (const auto& item : split(m_grid, ',')) g.push_back(to_count("experiment.m_grid", item));
    return g;
  }

  std::optional<std::pair<double, double>> slope_bounds() const {
    if (slope_range.empty()) return std::nullopt;
    const auto parts = split(slope_range, ',');
    if (parts.size() != 2) throw config_error("experiment.slope_range: expected LO,HI");
    return std::pair{to_double("experiment.slope_range", parts[0]),
                     to_double("experiment.slope_range", parts[1])};
  }

  unsigned job_count() const {
    if (jobs == 0) throw config_error("experiment.jobs: must be >= 1");
    return static_cast<unsigned>(std::min<std::uint64_t>(jobs, 1024));
  }

  TrialPlan plan() const {
    TrialPlan p;
    p.set = set_spec();
    p.ensemble = make_ensemble();
    p.delta = delta;
    p.m_grid = grid();
    p.pairs_per_m = pairs;
    p.trials_per_m = trials;
    p.k0 = k0;
    p.k0_filter = k0_filter;
    p.master_seed = seed;
    p.jobs = job_count();
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
    return p;
  }

  QuantizedMap make_map(std::size_t n) const {
    return QuantizedMap::sample(make_ensemble(), m, n, delta, seed, dither, quantizer_variant());
  }
};

namespace detail {

struct Outcome {
  std::vector<SummaryRow> rows;
  bool passed() const {
    return std::none_of(rows.begin(), rows.end(), [](const SummaryRow& r) { return r.verdict == "fail"; });
  }
  void check(std::ostream& os, const std::string& name, bool ok, const std::string& detail) {
    os << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    rows.push_back({name, std::nullopt, std::nullopt, ok ? "pass" : "fail"});
  }
  void note(std::ostream& os, const std::string& name, const std::string& detail) {
    os << "INFO " << name << ": " << detail << '\n';
    rows.push_back({name, std::nullopt, std::nullopt, "none"});
  }
};

inline std::string num(double v) { return format_number(v); }

inline void print_code(std::ostream& os, const QuantizedCode& c) {
  for (std::size_t i = 0; i < c.values.size(); ++i) os << (i ? " " : "") << c.values[i];
  os << '\n';
}

inline std::vector<Vector> input_vectors(const RunConfig& cfg, std::size_t n, std::size_t min_count) {
  if (cfg.input.empty()) throw config_error("--in is required");
  auto v = read_vectors(std::filesystem::path(cfg.input));
  if (v.size() < min_count)
    throw config_error(cfg.input + ": expected at least " + std::to_string(min_count) + " vectors");
  for (const auto& x : v)
    if (x.size() != n)
      throw config_error(cfg.input + ": vector of length " + std::to_string(x.size()) +
                         " does not match the set dimension " + std::to_string(n));
  return v;
}

inline int cmd_embed(const RunConfig& cfg, std::ostream& os) {
  const std::size_t n = ambient_dim(cfg.set_spec());
  const auto xs = input_vectors(cfg, n, 1);
  const auto map = cfg.make_map(n);
  for (const auto& x : xs) print_code(os, map.apply(x));
  return 0;
}

inline int cmd_distance(const RunConfig& cfg, std::ostream& os) {
  const std::size_t n = ambient_dim(cfg.set_spec());
  const auto xs = input_vectors(cfg, n, 2);
  const auto map = cfg.make_map(n);
  os << "D " << num(pseudo_distance(map, xs[0], xs[1])) << '\n';
  os << "D_t " << num(soft_pseudo_distance(map, xs[0], xs[1], cfg.t)) << '\n';
  os << "sqrt(2/pi)*l2 " << num(kSqrt2OverPi * norm2(difference(xs[0], xs[1]))) << '\n';
  return 0;
}

inline int cmd_width(const RunConfig& cfg, std::ostream& os) {
  const auto set = cfg.set_spec();
  const auto w = width_estimate(set, cfg.draws, cfg.seed, cfg.job_count());
  os << "width " << num(w.mean) << " stderr " << num(w.std_error) << " draws " << w.draws << '\n';
  if (const auto wb = w_bar_squared(set)) os << "wbar_squared " << num(*wb) << '\n';
  os << "diameter " << num(diameter(set)) << '\n';
  return 0;
}

inline int cmd_min_m(const RunConfig& cfg, std::ostream& os) {
  const auto kind = parse_requirement(cfg.requirement);
  const auto set = cfg.set_spec();
  try {
    os << "M " << minimal_m(set, kind, cfg.eps, cfg.delta, cfg.constant, cfg.draws, cfg.seed) << '\n';
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  return 0;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& os, bool width) {
  const TrialPlan plan = cfg.plan();
  ExperimentResult r;
  try {
    r = width ? consistency_width_sweep(plan) : quasi_isometry_sweep(plan);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  if (const auto b = cfg.slope_bounds()) r.judge(b->first, b->second);
  for (const auto& st : r.per_m)
    os << "M " << st.m << " statistic " << num(st.statistic) << " max " << num(st.max) << " q90 "
       << num(st.q90) << " q99 " << num(st.q99) << " censored " << st.censored_trials << '\n';
  if (r.fit)
    os << "slope " << num(r.fit->slope) << " stderr " << num(r.fit->std_error) << '\n';
  else
    os << "slope unavailable: " << r.fit_error << '\n';
  if (r.verdict) os << "verdict " << (*r.verdict ? "pass" : "fail") << '\n';
  write_experiment_files(cfg.out, r);
  write_summary_file(std::filesystem::path(cfg.out) / "summary.csv", {summarize(r)});
  return r.verdict.value_or(true) ? 0 : 1;
}

inline bool selected(const std::string& which, const std::string& name) {
  return which == "all" || which == name;
}

inline int finish(const RunConfig& cfg, Outcome& out) {
  write_summary_file(std::filesystem::path(cfg.out) / "summary.csv", out.rows);
  return out.passed() ? 0 : 1;
}

inline int cmd_counterexamples(const RunConfig& cfg, std::ostream& os) {
  static const std::vector<std::string> known{"all", "no-dither", "bernoulli-floor", "bernoulli-mad"};
  if (std::find(known.begin(), known.end(), cfg.which) == known.end())
    throw config_error("experiment.which: unknown counterexample '" + cfg.which + "'");
  Outcome out;
  const unsigned jobs = cfg.job_count();
  if (selected(cfg.which, "no-dither")) {
    if (!(cfg.s > 0.0 && cfg.s < 0.5)) throw config_error("experiment.s: must lie in (0, 1/2)");
    if (cfg.k0 < 1.0 || cfg.k0 != std::floor(cfg.k0)) throw config_error("experiment.k0: must be an integer >= 1");
    const auto r = no_dither_counterexample(static_cast<std::size_t>(cfg.k0), cfg.s, cfg.m, cfg.trials,
                                            cfg.seed, jobs);
    out.check(os, "no-dither", r.pass_rate == 1.0,
              "pass rate " + num(r.pass_rate) + ", irreducible width " + num(r.irreducible_width));
  }
  if (selected(cfg.which, "bernoulli-floor")) {
    const auto r = section2_bernoulli_floor(cfg.m, cfg.trials, cfg.seed, EnsembleKind::rademacher, 4, jobs);
    out.check(os, "bernoulli-floor", r.exceptions == 0,
              "D != 1 in " + std::to_string(r.exceptions) + " of " + std::to_string(r.trials) +
                  " maps, distortion floor " + num(r.floor));
  }
  if (selected(cfg.which, "bernoulli-mad")) {
    const double k = cfg.which == "all" ? 2.0 : cfg.k0;
    if (k < 2.0 || k != std::floor(k) || static_cast<std::uint64_t>(k) % 2 != 0)
      throw config_error("experiment.k0: must be even and >= 2");
    const auto r = bernoulli_floor_distortion(static_cast<std::size_t>(k));
    out.check(os, "bernoulli-mad", r.holds && r.consequence_holds,
              "MAD " + num(r.mad) + ", gap " + num(r.gap) + " >= " + num(r.bound));
  }
  return finish(cfg, out);
}

inline int cmd_combinatorics(const RunConfig& cfg, std::ostream& os) {
  if (cfg.stirling_max == 0) throw config_error("experiment.stirling_max: must be >= 1");
  if (cfg.mad_max < 2) throw config_error("experiment.mad_max: must be >= 2");
  Outcome out;
  const auto st = stirling_gosper_check(cfg.stirling_max);
  out.check(os, "stirling", st.passed(),
            "n <= " + std::to_string(cfg.stirling_max) + ", failures " + std::to_string(st.failures.size()));
  std::size_t gap_fail = 0, dm_fail = 0, lit_fail = 0;
  for (std::size_t n = 2; n <= cfg.mad_max; n += 2) {
    const auto r = bernoulli_floor_distortion(n);
    if (!r.holds || !r.consequence_holds) ++gap_fail;
    if (!(r.de_moivre_abs_diff <= 1e-12)) ++dm_fail;
    if (!r.doubled_holds) ++lit_fail;
  }
  out.check(os, "mad-gap", gap_fail == 0, "even n <= " + std::to_string(cfg.mad_max) + ", failures " +
                                              std::to_string(gap_fail));
  out.check(os, "de-moivre", dm_fail == 0, "mismatches " + std::to_string(dm_fail));
  out.note(os, "mad-gap-doubled-constant", "n with |E D - sqrt(2/pi)||w||| < 2C||w||/n: " +
                                               std::to_string(lit_fail));
  return finish(cfg, out);
}

inline int cmd_lemmas(const RunConfig& cfg, std::ostream& os) {
  static const std::vector<std::string> known{"all", "soft-count", "sandwich", "continuity",
                                              "diameter", "chernoff", "expectation", "linear-baseline"};
  if (std::find(known.begin(), known.end(), cfg.which) == known.end())
    throw config_error("experiment.which: unknown lemma '" + cfg.which + "'");
  Outcome out;
  const unsigned jobs = cfg.job_count();
  const auto ens = cfg.make_ensemble();
  const auto set = cfg.set_spec();
  const std::size_t n = ambient_dim(set);
  if (selected(cfg.which, "soft-count")) {
    std::size_t bad = 0;
    for (const auto& x : acceptance::detail::soft_count_tuples(cfg.seed, cfg.trials * 1000)) {
      if (soft_count_1d(x.a, x.b, x.t, x.delta) != oracle::soft_count_brute(x.a, x.b, x.t, x.delta)) ++bad;
      if (!lemma1_check(x.a, x.b, x.t, x.s, x.delta).holds()) ++bad;
    }
    out.check(os, "soft-count", bad == 0, "violations " + std::to_string(bad));
  }
  if (selected(cfg.which, "sandwich") || selected(cfg.which, "continuity")) {
    std::size_t sandwich_bad = 0, cont_bad = 0;
    for (std::size_t i = 0; i < cfg.trials; ++i) {
      const auto map = QuantizedMap::sample(ens, cfg.m, n, cfg.delta, derive_seed(cfg.seed, {1, i}));
      Rng rng(derive_seed(cfg.seed, {2, i}));
      const Vector x = sample_point(set, rng), y = sample_point(set, rng);
      const auto rep = soft_distance_report(map, x, y, cfg.t);
      if (!rep.sandwich_holds() || !rep.lemma1_holds()) ++sandwich_bad;
      Vector xp(n), yp(n);
      for (double& v : xp) v = rng.normal();
      for (double& v : yp) v = rng.normal();
      const double lim = cfg.eta * std::sqrt(static_cast<double>(cfg.m));
      const double sx = lim / std::max(norm2(map.project_linear(xp)), 1e-300);
      const double sy = lim / std::max(norm2(map.project_linear(yp)), 1e-300);
      for (double& v : xp) v *= sx * (1.0 - 1e-9);
      for (double& v : yp) v *= sy * (1.0 - 1e-9);
      if (!lemma3_check(map, x, y, xp, yp, cfg.t, cfg.eta, 1.0 + rng.index(16)).holds) ++cont_bad;
    }
    if (selected(cfg.which, "sandwich"))
      out.check(os, "sandwich", sandwich_bad == 0, "violations " + std::to_string(sandwich_bad));
    if (selected(cfg.which, "continuity"))
      out.check(os, "continuity", cont_bad == 0, "violations " + std::to_string(cont_bad));
  }
  if (selected(cfg.which, "diameter")) {
    const auto r = lemma4_diameter_check(set, cfg.eta, ens, cfg.m, cfg.trials, cfg.seed, 64, 2.0, jobs);
    out.note(os, "diameter", "failure rate " + num(r.failure_rate) + " over " + std::to_string(r.trials) +
                                 " trials (factor " + num(r.factor) + ")");
  }
  if (selected(cfg.which, "chernoff")) {
    Rng rng(derive_seed(cfg.seed, {3}));
    const Vector u = sample_point(set, rng), v = sample_point(set, rng);
    Lemma5Options opt;
    opt.jobs = jobs;
    const auto r = lemma5_chernoff_check(u, v, std::min(cfg.k0, anti_sparsity_level(difference(u, v))),
                                         cfg.t, ens, cfg.delta, cfg.m, cfg.trials, cfg.seed, opt);
    std::string detail = "p_hat " + num(r.p_hat.mean) + ", left " + num(r.left.mean) + " <= " +
                         num(r.chernoff_bound) + (r.vacuous ? " (vacuous)" : "");
    if (r.p_lower_bound) detail += ", p lower bound " + num(*r.p_lower_bound);
    else detail += ", lower bound skipped: " + r.lower_bound_skipped;
    out.check(os, "chernoff", r.chernoff_holds && r.lower_bound_holds, detail);
  }
  if (selected(cfg.which, "expectation")) {
    Rng rng(derive_seed(cfg.seed, {4}));
    const Vector x = sample_point(set, rng), y = sample_point(set, rng);
    const auto r = expectation_identity_check(ens, x, y, cfg.delta, cfg.m, std::max<std::uint64_t>(cfg.trials, 2),
                                              cfg.seed, jobs);
    out.check(os, "expectation", r.holds,
              "mean D " + num(r.mean_d.mean) + " +- " + num(r.mean_d.std_error) + " vs " + num(r.target));
  }
  if (selected(cfg.which, "linear-baseline")) {
    const auto r = linear_baseline(ens, set, cfg.m, cfg.pairs, cfg.seed, cfg.delta);
    out.check(os, "linear-baseline", r.holds(),
              "eps_hat " + num(r.eps_hat) + ", violations " + std::to_string(r.violations));
  }
  return finish(cfg, out);
}

inline int cmd_selftest(const RunConfig& cfg, std::ostream& os) {
  const auto run = run_acceptance(cfg.seed, cfg.job_count(), [&](const CriterionResult& c) {
    os << (c.passed && c.within_budget ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
       << "): " << c.detail << '\n';
    os.flush();
  });
  for (const auto& e : run.experiments) write_experiment_files(cfg.out, e);
  write_summary_file(std::filesystem::path(cfg.out) / "summary.csv", run.summary);
  return run.all_passed() ? 0 : 1;
}

}  // namespace detail

inline const std::vector<std::pair<std::string, std::string>>& commands() {
  static const std::vector<std::pair<std::string, std::string>> c{
      {"embed", "print the quantized code of each --in vector"},
      {"distance", "D and D^t between the first two --in vectors"},
      {"width", "Monte Carlo Gaussian mean width of the set"},
      {"min-m", "smallest M meeting a named requirement"},
      {"quasi-isometry", "distortion sweep over the M grid with slope fit"},
      {"consistency-width", "consistent ray width sweep with slope fit"},
      {"counterexamples", "no-dither, bernoulli-floor and bernoulli-mad checks"},
      {"lemmas", "concentration and continuity checks (--which)"},
      {"combinatorics", "De Moivre, MAD gap and Stirling sandwich checks"},
      {"selftest", "acceptance criteria 1-13 with summary.csv"},
  };
  return c;
}

/// Entry point shared by the qembed executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& os = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Quantized random embeddings: maps, distances, widths and experiments", "qembed"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "key=value configuration file")->type_name("FILE");

  // Flag name -> configuration key. Values are applied after the file.
  struct Flag {
    const char* name;
    const char* key;
    const char* type;
    const char* help;
  };
  constexpr Flag mapped[] = {
      {"--set", "set.spec", "SPEC", "sparse:N=..,K=..[,d=..,basis=dct] | ball:N=..[,d=..] | lowrank:N1=..,N2=..,r=..[,d=..] | finite:FILE"},
      {"--ensemble", "ensemble.name", "NAME", "gaussian, rademacher or uniform"},
      {"--kappa", "ensemble.kappa", "SRC", "exact-zero, generic-bound or estimated"},
      {"--delta", "quantizer.delta", "FLOAT", "quantizer resolution"},
      {"--variant", "quantizer.variant", "NAME", "floor or round"},
      {"--seed", "experiment.seed", "UINT", "master seed"},
      {"--jobs", "experiment.jobs", "UINT", "worker threads"},
      {"--m", "experiment.m", "UINT", "number of measurements"},
      {"--m-grid", "experiment.m_grid", "LIST", "comma separated M values for sweeps"},
      {"--pairs", "experiment.pairs", "UINT", "pairs or ray probes per map"},
      {"--trials", "experiment.trials", "UINT", "independent maps per M"},
      {"--k0", "experiment.k0", "UINT", "sub-Gaussian aggregation size"},
      {"--eps", "experiment.eps", "FLOAT", "target distortion"},
      {"--t", "experiment.t", "FLOAT", "soft count margin t"},
      {"--s", "experiment.s", "FLOAT", "coordinate offset for the no-dither counterexample, in (0, 1/2)"},
      {"--eta", "experiment.eta", "FLOAT", "local scale"},
      {"--which", "experiment.which", "NAME", "check to run for counterexamples or lemmas"},
      {"--stirling-max", "experiment.stirling_max", "UINT", "largest n for the Stirling sandwich"},
      {"--mad-max", "experiment.mad_max", "UINT", "largest even k0 for the MAD gap"},
      {"--draws", "experiment.draws", "UINT", "Monte Carlo draws"},
      {"--requirement", "experiment.requirement", "NAME", "requirement for min-m"},
      {"--constant", "experiment.constant", "FLOAT", "absolute constant for min-m"},
      {"--slope-range", "experiment.slope_range", "LO,HI", "pass band for the fitted slope"},
      {"--in", "experiment.input", "FILE", "input vectors, one per line"},
      {"--out", "output.dir", "DIR", "output directory"},
  };
  std::map<std::string, std::string> values;
  for (const auto& f : mapped) {
    app.add_option(f.name, values[f.name], std::string(f.help) + " [" + f.key + "]")
        ->type_name(f.type);
  }
  bool no_dither = false, no_filter = false;
  app.add_flag("--no-dither", no_dither, "quantizer.dither = false");
  app.add_flag("--no-k0-filter", no_filter, "experiment.k0_filter = false");

  for (const auto& [name, help] : commands()) app.add_subcommand(name, help);

  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    os << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "qembed: " << e.what() << '\n';
    return 2;
  }

  RunConfig cfg;
  try {
    cfg.command = app.get_subcommands().front()->get_name();
    if (const char* env = std::getenv("QEMBED_SEED"); env && *env) cfg.set_key("experiment.seed", env);
    if (!config_path.empty()) cfg.load(std::filesystem::path(config_path));
    for (const auto& f : mapped)
      if (app.count(f.name) > 0) cfg.set_key(f.key, values[f.name]);
    if (no_dither) cfg.dither = false;
    if (no_filter) cfg.k0_filter = false;

    const std::string& c = cfg.command;
    if (c == "embed") return detail::cmd_embed(cfg, os);
    if (c == "distance") return detail::cmd_distance(cfg, os);
    if (c == "width") return detail::cmd_width(cfg, os);
    if (c == "min-m") return detail::cmd_min_m(cfg, os);
    if (c == "quasi-isometry") return detail::cmd_sweep(cfg, os, false);
    if (c == "consistency-width") return detail::cmd_sweep(cfg, os, true);
    if (c == "counterexamples") return detail::cmd_counterexamples(cfg, os);
    if (c == "lemmas") return detail::cmd_lemmas(cfg, os);
    if (c == "combinatorics") return detail::cmd_combinatorics(cfg, os);
    if (c == "selftest") return detail::cmd_selftest(cfg, os);
    err << "qembed: unknown subcommand " << c << '\n';
    return 2;
  } catch (const config_error& e) {
    err << "qembed: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "qembed: invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const incompatible_set& e) {
    err << "qembed: " << e.what() << '\n';
    return 2;
  } catch (const precondition_failed& e) {
    err << "qembed: precondition failed: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "qembed: error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace qembed::cli
