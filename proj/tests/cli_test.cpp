// Copyright 2026 The cbbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cbbench/cli.hpp"

namespace cbbench {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"cbbench"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("cbbench_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string at(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(CliTest, SynthWritesRowsDeterministically) {
  const auto r = run({"synth", "--subjects", "50", "--samples", "6", "--dim", "128", "--sigma", "0.35",
                      "--seed", "42", "--out", at("t.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("50 subjects x 6 samples, d=128"), std::string::npos);
  const std::string text = slurp(at("t.csv"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 301);
  run({"synth", "--subjects", "50", "--samples", "6", "--dim", "128", "--sigma", "0.35", "--seed", "42",
       "--out", at("u.csv")});
  EXPECT_EQ(slurp(at("u.csv")), text);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({"synth", "--subjects", "1", "--out", at("x.csv")}).code, kExitUsage);
  EXPECT_EQ(run({"synth", "--bogus", "--out", at("x.csv")}).code, kExitUsage);
  EXPECT_EQ(run({"synth"}).code, kExitUsage);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"eval-perf", "--scheme", "fuzzyvault"}).code, kExitUsage);
  EXPECT_EQ(run({"eval-perf", "--scenario", "hijacked"}).code, kExitUsage);
  EXPECT_FALSE(fs::exists(at("x.csv")));
}

TEST_F(CliTest, EvalPerfSeparable) {
  const auto r = run({"eval-perf", "--scheme", "biohash", "--scenario", "normal", "--out-dir", at("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("EER 0.0000\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(at("o/det_biohash_normal.csv")));
  const auto u = run({"eval-perf", "--scheme", "unprotected", "--subjects", "10"});
  EXPECT_EQ(u.code, 0) << u.err;
  EXPECT_NE(u.out.find("EER "), std::string::npos);
}

TEST_F(CliTest, EvalPerfReadsTemplates) {
  ASSERT_EQ(run({"synth", "--subjects", "8", "--samples", "3", "--dim", "32", "--out", at("t.csv")}).code, 0);
  const auto r = run({"eval-perf", "--templates", at("t.csv"), "--scheme", "iom-grp"});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto missing = run({"eval-perf", "--templates", at("none.csv")});
  EXPECT_EQ(missing.code, kExitFailure);
  EXPECT_NE(missing.err.find("none.csv"), std::string::npos);
}

TEST_F(CliTest, ScenarioMetricMatrix) {
  const auto unlink = run({"eval-unlink", "--scheme", "biohash", "--scenario", "stolen-token"});
  EXPECT_NE(unlink.code, 0);
  EXPECT_NE(unlink.err.find("sample-specific"), std::string::npos);
  EXPECT_NE(run({"eval-perf", "--scenario", "sample-specific"}).code, 0);
  EXPECT_NE(run({"eval-irrev", "--scenario", "sample-specific"}).code, 0);
}

TEST_F(CliTest, EvalUnlink) {
  const auto r = run({"eval-unlink", "--scheme", "iom-grp", "--subjects", "10", "--out-dir", at("u")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("D_sys ", 0), 0u);
  EXPECT_TRUE(fs::exists(at("u/unlink_iom-grp.csv")));
}

TEST_F(CliTest, EvalIrrevShrinksWithWarning) {
  const auto r = run({"eval-irrev", "--scheme", "biohash", "--subjects", "10", "--samples", "3", "--r", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("using r=29"), std::string::npos);
  EXPECT_NE(r.out.find("MI "), std::string::npos);
  EXPECT_NE(r.out.find("r 29\n"), std::string::npos);
}

TEST_F(CliTest, ProtectWritesTemplateFormat) {
  ASSERT_EQ(run({"synth", "--subjects", "4", "--samples", "2", "--dim", "16", "--out", at("t.csv")}).code, 0);
  const auto r = run({"protect", "--templates", at("t.csv"), "--scheme", "randhash", "--length", "32",
                      "--out", at("p.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Dataset p = read_templates(at("p.csv"));
  EXPECT_EQ(p.dimension, 32u);
  EXPECT_EQ(p.templates.size(), 8u);
  for (const auto& t : p.templates)
    for (double v : t.features) EXPECT_TRUE(v == 0.0 || v == 1.0);
  EXPECT_EQ(run({"protect", "--templates", at("t.csv"), "--scheme", "unprotected", "--out", at("q.csv")}).code,
            kExitUsage);
  EXPECT_EQ(run({"protect", "--templates", at("t.csv"), "--length", "4", "--out", at("q.csv")}).code,
            kExitUsage);
}

TEST_F(CliTest, BenchSmallConfig) {
  {
    std::ofstream cfg(at("c.json"));
    cfg << R"({"schemes": ["bloom", "mlphash"], "mi_components": 10,
               "input": {"synthetic": {"subjects": 6, "samples": 3, "dim": 32}}, "out_dir": "res"})";
  }
  const auto r = run({"bench", "--config", at("c.json"), "--threads", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(at("res/report.json")));
  EXPECT_TRUE(fs::exists(at("res/det_bloom_stolen-token.csv")));
  EXPECT_NE(r.err.find("running mlphash/sample-specific"), std::string::npos);

  const auto seeded = run({"bench", "--config", at("c.json"), "--seed", "5", "--out-dir", at("other")});
  ASSERT_EQ(seeded.code, 0) << seeded.err;
  std::ifstream in(at("other/report.json"));
  EXPECT_EQ(nlohmann::json::parse(in)["config"]["master_seed"], 5);
}

TEST_F(CliTest, BenchUnknownSchemeNamed) {
  {
    std::ofstream cfg(at("c.json"));
    cfg << R"({"schemes": ["biohash", "fuzzyvault"]})";
  }
  const auto r = run({"bench", "--config", at("c.json"), "--out-dir", at("res")});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("fuzzyvault"), std::string::npos);
  EXPECT_FALSE(fs::exists(at("res")));
}

TEST_F(CliTest, BenchFailingCellLeavesNothing) {
  {
    std::ofstream cfg(at("c.json"));
    cfg << R"({"schemes": ["biohash", {"name": "iom-urp", "params": {"iom_k": 64}}],
               "input": {"synthetic": {"subjects": 4, "samples": 2, "dim": 16}}})";
  }
  const auto r = run({"bench", "--config", at("c.json"), "--out-dir", at("res")});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("iom-urp/normal"), std::string::npos);
  EXPECT_FALSE(fs::exists(at("res")));
}

TEST_F(CliTest, Version) {
  const auto r = run({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(kVersion), std::string::npos);
}

}  // namespace
}  // namespace cbbench
