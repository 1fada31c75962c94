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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qembed/cli.hpp"

using namespace qembed;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "qembed");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qembed_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"nonsense"}).code, 2);
  const auto r = run_cli({"combinatorics", "--bogus-flag", "3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--bogus-flag"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"width", "--set", "sparse:N=4"}).code, 2);
  EXPECT_EQ(run_cli({"width", "--set", "cube:N=4"}).code, 2);
  EXPECT_EQ(run_cli({"width", "--draws", "abc"}).code, 2);
  EXPECT_EQ(run_cli({"width", "--jobs", "0"}).code, 2);
}

TEST(Cli, UnknownConfigKeyIsNamed) {
  const auto dir = scratch("badkey");
  write(dir / "run.ini", "[experiment]\nseed = 3\nfrobnicate = 1\n");
  const auto r = run_cli({"combinatorics", "--config", (dir / "run.ini").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("experiment.frobnicate"), std::string::npos) << r.err;
}

TEST(Cli, ConfigParsing) {
  cli::RunConfig cfg;
  std::istringstream is(
      "# comment\n[set]\nspec = ball:N=3,d=0.5\n[quantizer]\ndelta = 0.25 ; trailing\n"
      "dither = false\n[experiment]\nm_grid = 8, 16,32\n[output]\ndir = somewhere\n");
  cfg.load(is, "mem");
  EXPECT_EQ(cfg.set, "ball:N=3,d=0.5");
  EXPECT_EQ(cfg.delta, 0.25);
  EXPECT_FALSE(cfg.dither);
  EXPECT_EQ(cfg.grid(), (std::vector<std::size_t>{8, 16, 32}));
  EXPECT_EQ(cfg.out, "somewhere");
  std::istringstream orphan("delta = 1\n");
  EXPECT_THROW(cfg.load(orphan, "mem"), cli::config_error);
  std::istringstream bad("[quantizer]\ndelta = fast\n");
  EXPECT_THROW(cfg.load(bad, "mem"), cli::config_error);
}

TEST(Cli, SetStrings) {
  const auto s = cli::parse_set("sparse:N=64,K=4,d=1");
  ASSERT_TRUE(std::holds_alternative<SparseBall>(s));
  EXPECT_EQ(std::get<SparseBall>(s).k, 4u);
  EXPECT_TRUE(std::get<SparseBall>(cli::parse_set("sparse:N=8,K=2,basis=dct")).basis.has_value());
  EXPECT_EQ(std::get<LowRankBall>(cli::parse_set("lowrank:N1=3,N2=5,r=2,d=2")).cols, 5u);
  EXPECT_EQ(std::get<EuclideanBall>(cli::parse_set("ball:N=3")).radius, 1.0);
  EXPECT_THROW(cli::parse_set("ball:N=3,q=1"), cli::config_error);
  EXPECT_THROW(cli::parse_set("sparse:N=3,K=5"), cli::config_error);
  const auto dir = scratch("finite");
  write(dir / "pts.txt", "# two points\n1 2 3\n\n4 5 6\n");
  const auto f = std::get<FiniteSet>(cli::parse_set("finite:" + (dir / "pts.txt").string()));
  ASSERT_EQ(f.points.size(), 2u);
  EXPECT_EQ(f.points[1][2], 6.0);
}

TEST(Cli, EmbedPrintsTheCode) {
  const auto dir = scratch("embed");
  write(dir / "x.txt", "0.5 0 0 -0.25\n0 0 0 0\n");
  const auto r = run_cli({"embed", "--set", "ball:N=4", "--delta", "0.5", "--m", "16", "--seed", "5", "--in",
                          (dir / "x.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto map = QuantizedMap::sample(Ensemble::make(EnsembleKind::gaussian), 16, 4, 0.5, 5);
  std::ostringstream expected;
  for (const auto& x : {std::vector<double>{0.5, 0, 0, -0.25}, std::vector<double>(4, 0.0)}) {
    const auto c = map.apply(x);
    for (std::size_t i = 0; i < c.values.size(); ++i) expected << (i ? " " : "") << c.values[i];
    expected << '\n';
  }
  EXPECT_EQ(r.out, expected.str());
  EXPECT_EQ(run_cli({"embed", "--set", "ball:N=3", "--in", (dir / "x.txt").string()}).code, 2);
  EXPECT_EQ(run_cli({"embed", "--set", "ball:N=4"}).code, 2);
}

TEST(Cli, DistanceWidthMinM) {
  const auto dir = scratch("distance");
  write(dir / "xy.txt", "1 0 0\n0 0 0\n");
  const auto d = run_cli({"distance", "--set", "ball:N=3", "--ensemble", "rademacher", "--m", "64", "--in",
                          (dir / "xy.txt").string()});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_NE(d.out.find("D 1\n"), std::string::npos) << d.out;
  const auto w = run_cli({"width", "--set", "ball:N=2", "--draws", "20000"});
  ASSERT_EQ(w.code, 0);
  EXPECT_EQ(w.out.rfind("width 1.25", 0), 0u) << w.out;
  const auto m = run_cli({"min-m", "--set", "sparse:N=64,K=4", "--eps", "0.2", "--delta", "0.5"});
  ASSERT_EQ(m.code, 0) << m.err;
  EXPECT_EQ(m.out.rfind("M ", 0), 0u);
  EXPECT_EQ(run_cli({"min-m", "--set", "ball:N=3", "--requirement", "width-structured"}).code, 2);
}

TEST(Cli, Combinatorics) {
  const auto dir = scratch("comb");
  const auto r = run_cli({"combinatorics", "--stirling-max", "10000", "--mad-max", "40", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const auto csv = slurp(dir / "summary.csv");
  EXPECT_EQ(csv.rfind("experiment,slope,stderr,verdict\r\n", 0), 0u);
  EXPECT_NE(csv.find("stirling,,,pass"), std::string::npos);
}

TEST(Cli, NoDitherCounterexample) {
  const auto dir = scratch("cx");
  const auto r = run_cli({"counterexamples", "--which", "no-dither", "--k0", "64", "--s", "0.4", "--m", "512",
                          "--trials", "1000", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("pass rate 1,"), std::string::npos) << r.out;
  EXPECT_EQ(run_cli({"counterexamples", "--which", "no-dither", "--s", "0.6", "--out", dir.string()}).code, 2);
  EXPECT_EQ(run_cli({"counterexamples", "--which", "everything", "--out", dir.string()}).code, 2);
}

TEST(Cli, ConcentrationChecks) {
  const auto dir = scratch("lemmas");
  const auto r = run_cli({"lemmas", "--set", "sparse:N=32,K=3", "--m", "128", "--trials", "40", "--pairs", "20",
                          "--t", "0.1", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  for (const char* name : {"soft-count", "sandwich", "continuity", "diameter", "chernoff", "expectation",
                           "linear-baseline"})
    EXPECT_NE(r.out.find(name), std::string::npos) << name;
}

TEST(Cli, SweepCsvIsReproducibleAndJobIndependent) {
  const auto a = scratch("sweep_a"), b = scratch("sweep_b");
  const std::vector<std::string> base{"quasi-isometry", "--set", "sparse:N=64,K=3", "--delta", "0.5",
                                      "--m-grid", "64,128,256", "--pairs", "10", "--trials", "3",
                                      "--seed", "4"};
  auto args_a = base, args_b = base;
  args_a.insert(args_a.end(), {"--jobs", "1", "--out", a.string()});
  args_b.insert(args_b.end(), {"--jobs", "3", "--out", b.string()});
  ASSERT_EQ(run_cli(args_a).code, 0);
  ASSERT_EQ(run_cli(args_b).code, 0);
  const auto ca = slurp(a / "quasi-isometry.csv");
  EXPECT_FALSE(ca.empty());
  EXPECT_EQ(ca, slurp(b / "quasi-isometry.csv"));
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
  EXPECT_EQ(slurp(a / "quasi-isometry.dat"), slurp(b / "quasi-isometry.dat"));
}

TEST(Cli, SlopeVerdictDrivesExitCode) {
  const auto dir = scratch("verdict");
  const std::vector<std::string> base{"consistency-width", "--set", "sparse:N=64,K=3", "--delta", "0.5",
                                      "--m-grid", "64,256,1024", "--pairs", "10", "--trials", "3",
                                      "--out", dir.string()};
  auto pass = base, fail = base;
  pass.insert(pass.end(), {"--slope-range", "-1.5,-0.5"});
  fail.insert(fail.end(), {"--slope-range", "0.5,1.5"});
  EXPECT_EQ(run_cli(pass).code, 0);
  EXPECT_EQ(run_cli(fail).code, 1);
  EXPECT_NE(slurp(dir / "summary.csv").find(",fail"), std::string::npos);
}

TEST(Cli, SeedPrecedence) {
  const auto dir = scratch("seed");
  write(dir / "x.txt", "0.3 -0.2 0.7\n");
  write(dir / "cfg.ini", "[experiment]\nseed = 9\n");
  const std::vector<std::string> base{"embed", "--set", "ball:N=3", "--m", "32", "--in", (dir / "x.txt").string()};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return run_cli(a).out;
  };
  const std::string s0 = with({}), s9 = with({"--seed", "9"}), s3 = with({"--seed", "3"});
  EXPECT_NE(s0, s9);
  EXPECT_EQ(with({"--config", (dir / "cfg.ini").string()}), s9);
  EXPECT_EQ(with({"--config", (dir / "cfg.ini").string(), "--seed", "3"}), s3);
  ::setenv("QEMBED_SEED", "9", 1);
  EXPECT_EQ(with({}), s9);
  EXPECT_EQ(with({"--seed", "0"}), s0);
  ::unsetenv("QEMBED_SEED");
}
