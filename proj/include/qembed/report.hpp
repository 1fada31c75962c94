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

// CSV (RFC 4180) and gnuplot data writers for experiment results.
// Numbers are printed with %.17g so equal results give equal bytes.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qembed/experiments.hpp"

namespace qembed {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Quotes a field when it contains a comma, quote, CR or LF.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) os << ',';
    os << csv_field(fields[i]);
  }
  os << "\r\n";
}

inline void write_experiment_csv(std::ostream& os, const ExperimentResult& r) {
  write_csv_row(os, {"experiment", "m", "trial", "statistic", "censored", "seed"});
  for (const auto& row : r.rows)
    write_csv_row(os, {r.experiment, std::to_string(row.m), std::to_string(row.trial),
                       format_number(row.statistic), row.censored ? "1" : "0", std::to_string(row.seed)});
}

struct SummaryRow {
  std::string experiment;
  std::optional<double> slope;
  std::optional<double> std_error;
  std::string verdict;  ///< "pass", "fail" or "none"
};

inline SummaryRow summarize(const ExperimentResult& r) {
  SummaryRow s;
  s.experiment = r.experiment;
  if (r.fit) {
    s.slope = r.fit->slope;
    s.std_error = r.fit->std_error;
  }
  s.verdict = r.verdict ? (*r.verdict ? "pass" : "fail") : "none";
  return s;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  write_csv_row(os, {"experiment", "slope", "stderr", "verdict"});
  for (const auto& s : rows)
    write_csv_row(os, {s.experiment, s.slope ? format_number(*s.slope) : "",
                       s.std_error ? format_number(*s.std_error) : "", s.verdict});
}

/// Two columns, log10 M and log10 statistic; censored M are skipped.
inline void write_gnuplot_dat(std::ostream& os, const ExperimentResult& r) {
  os << "# " << r.experiment << ": log10(M) log10(statistic)\n";
  for (const auto& st : r.per_m) {
    if (st.censored || !(st.statistic > 0.0)) continue;
    os << format_number(std::log10(static_cast<double>(st.m))) << ' '
       << format_number(std::log10(st.statistic)) << '\n';
  }
}

namespace detail {

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& w) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  w(os);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

/// Writes <dir>/<experiment>.csv and <dir>/<experiment>.dat.
inline void write_experiment_files(const std::filesystem::path& dir, const ExperimentResult& r) {
  detail::write_file(dir / (r.experiment + ".csv"), [&](std::ostream& os) { write_experiment_csv(os, r); });
  detail::write_file(dir / (r.experiment + ".dat"), [&](std::ostream& os) { write_gnuplot_dat(os, r); });
}

inline void write_summary_file(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  detail::write_file(path, [&](std::ostream& os) { write_summary_csv(os, rows); });
}

}  // namespace qembed
