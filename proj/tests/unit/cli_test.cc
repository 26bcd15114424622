/*
 * Copyright 2026 The Attrshield Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// End-to-end checks of the attrshield command-line tool: exit codes, the
// synth/train/attack/evaluate pipeline and reproducible output.

#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "json.hpp"
#include "test_util.h"

namespace attrshield {
namespace {

using ::attrshield::testing::ReadFile;
using ::attrshield::testing::TempDir;
using ::attrshield::testing::WriteFile;

testing::CommandResult Cli(const std::string& args) {
  return testing::RunCommand(std::string(ATTRSHIELD_CLI_PATH) + " " + args);
}

// One trained model shared by the pipeline tests.
class CliPipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    const std::string d = dir_->path().string();
    ASSERT_EQ(Cli("synth --out-dir " + d + " --docs 200").code, 0);
    ASSERT_EQ(Cli("train --data " + d + "/corpus.tsv --embeddings " + d +
                  "/embeddings.txt --epochs 40 --out " + d + "/model.json --test-out " + d +
                  "/test.tsv")
                  .code,
              0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string P(const std::string& name) { return (dir_->path() / name).string(); }

  static TempDir* dir_;
};

TempDir* CliPipelineTest::dir_ = nullptr;

TEST(CliTest, NoSubcommandIsUsageError) { EXPECT_EQ(Cli("").code, 1); }

TEST(CliTest, UnknownFlagIsUsageError) { EXPECT_EQ(Cli("synth --bogus 1").code, 1); }

TEST(CliTest, MissingRequiredOptionIsUsageError) {
  EXPECT_EQ(Cli("attack --data x.tsv --out r.json").code, 1);
}

TEST(CliTest, HelpSucceeds) { EXPECT_EQ(Cli("--help").code, 0); }

TEST(CliTest, UnreadableCorpusIsRuntimeError) {
  TempDir dir;
  WriteFile(dir / "e.txt", "a 1 2\n");
  EXPECT_EQ(Cli("train --data " + (dir / "missing.tsv").string() + " --embeddings " +
                (dir / "e.txt").string() + " --out " + (dir / "m.json").string())
                .code,
            2);
}

TEST_F(CliPipelineTest, TrainWritesSidecars) {
  EXPECT_FALSE(ReadFile(P("model.json")).empty());
  EXPECT_FALSE(ReadFile(P("model.json.meta.json")).empty());
  EXPECT_FALSE(ReadFile(P("model.json.lm.json")).empty());
}

TEST_F(CliPipelineTest, EvaluateReportsAccuracy) {
  const auto r = Cli("evaluate --model " + P("model.json") + " --data " + P("test.tsv"));
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GE(j.at("accuracy").get<double>(), 0.9);
}

TEST_F(CliPipelineTest, AttackThenEvaluateCsvIsConsistent) {
  const auto attack = Cli("attack --model " + P("model.json") + " --data " + P("test.tsv") +
                          " --population 10 --iterations 5 --out " + P("r.json"));
  ASSERT_EQ(attack.code, 0);
  const auto report = nlohmann::json::parse(ReadFile(P("r.json")));
  EXPECT_EQ(report.at("format"), "attrshield-report");
  const auto check = Cli("evaluate --csv " + P("r.csv") + " --report " + P("r.json"));
  ASSERT_EQ(check.code, 0);
  EXPECT_TRUE(nlohmann::json::parse(check.out).at("consistent").get<bool>());
}

TEST_F(CliPipelineTest, EvaluateFlagsTamperedCsv) {
  ASSERT_EQ(Cli("attack --model " + P("model.json") + " --data " + P("test.tsv") +
                " --population 10 --iterations 5 --all --no-timing --out " + P("t.json"))
                .code,
            0);
  // Flip the success column (third field) of the first successful row.
  std::istringstream in(ReadFile(P("t.csv")));
  std::string csv, line;
  bool flipped = false;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    if (!flipped && b != std::string::npos && line.compare(b + 1, 2, "1,") == 0) {
      line[b + 1] = '0';
      flipped = true;
    }
    csv += line + "\n";
  }
  ASSERT_TRUE(flipped);
  WriteFile(P("t.csv"), csv);
  EXPECT_EQ(Cli("evaluate --csv " + P("t.csv") + " --report " + P("t.json")).code, 2);
}

TEST_F(CliPipelineTest, NoTimingRerunsAreByteIdentical) {
  const std::string base = "attack --model " + P("model.json") + " --data " + P("test.tsv") +
                           " --population 8 --iterations 4 --seed 5 --no-timing --workers 2";
  ASSERT_EQ(Cli(base + " --out " + P("a.json")).code, 0);
  ASSERT_EQ(Cli(base + " --out " + P("b.json")).code, 0);
  EXPECT_EQ(ReadFile(P("a.csv")), ReadFile(P("b.csv")));
  EXPECT_EQ(ReadFile(P("a.json")), ReadFile(P("b.json")));
}

TEST_F(CliPipelineTest, ConfigFileAndFlagPrecedence) {
  WriteFile(P("cfg.json"), R"({"population_size": 6, "max_iterations": 3, "seed": 4})");
  ASSERT_EQ(Cli("--config " + P("cfg.json") + " attack --model " + P("model.json") + " --data " +
                P("test.tsv") + " --iterations 2 --out " + P("c.json"))
                .code,
            0);
  const auto cfg = nlohmann::json::parse(ReadFile(P("c.json"))).at("config");
  EXPECT_EQ(cfg.at("population_size"), 6);
  EXPECT_EQ(cfg.at("max_iterations"), 2);
  EXPECT_EQ(cfg.at("seed"), 4);
}

TEST_F(CliPipelineTest, BadConfigIsUsageError) {
  WriteFile(P("bad.json"), R"({"populaton_size": 6})");
  EXPECT_EQ(Cli("--config " + P("bad.json") + " attack --model " + P("model.json") + " --data " +
                P("test.tsv") + " --out " + P("x.json"))
                .code,
            1);
  EXPECT_EQ(Cli("attack --model " + P("model.json") + " --data " + P("test.tsv") +
                " --eta 0 --out " + P("x.json"))
                .code,
            1);
}

TEST_F(CliPipelineTest, CorruptCheckpointIsRuntimeError) {
  WriteFile(P("broken.json"), "{not json");
  EXPECT_EQ(Cli("evaluate --model " + P("broken.json") + " --data " + P("test.tsv") +
                " --embeddings " + P("embeddings.txt"))
                .code,
            2);
}

}  // namespace
}  // namespace attrshield
