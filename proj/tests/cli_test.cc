/*
 * Copyright 2026 The ExpNet Kit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "expnet/cli.h"

#include <sstream>

#include "expnet/baseline.h"
#include "expnet/common.h"
#include "expnet/network.h"
#include "expnet/trace.h"
#include "fixtures.h"
#include "gtest/gtest.h"
#include "suite.h"

namespace expnet {
namespace {

using ::expnet::testing::MakeTrace;
using ::expnet::testing::TempDir;
using ::expnet::testing::WriteSyntheticExperiment;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(CliTest, ValidateGoodAndBadFiles) {
  TempDir dir("cli");
  WriteTraces({MakeTrace("a", {0, 1}), MakeTrace("b", {0})},
              dir / "good.jsonl");
  Result r = Invoke({"validate", (dir / "good.jsonl").string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("2 traces"), std::string::npos);

  FloatJson bad = TraceToJson(MakeTrace("bad", {0, 1}));
  bad["attn_task_to_token"][0][1] = 0.9;
  WriteFile(dir / "bad.jsonl", bad.dump() + "\n");
  r = Invoke({"validate", (dir / "bad.jsonl").string()});
  EXPECT_EQ(r.code, kExitInvalid);
  EXPECT_NE(r.err.find("row-stochastic"), std::string::npos);
  EXPECT_NE(r.err.find("bad"), std::string::npos);

  WriteFile(dir / "junk.jsonl", "not json\n");
  EXPECT_EQ(Invoke({"validate", (dir / "junk.jsonl").string()}).code,
            kExitInvalid);
  EXPECT_EQ(Invoke({"validate", (dir / "missing.jsonl").string()}).code,
            kExitRuntime);
}

TEST(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(Invoke({}).code, kExitRuntime);
  EXPECT_EQ(Invoke({"validate", "x", "--bogus"}).code, kExitRuntime);
  EXPECT_EQ(Invoke({"frobnicate"}).code, kExitRuntime);
  EXPECT_EQ(Invoke({"binarize", "scores.jsonl"}).code, kExitRuntime);
  const Result help = Invoke({"--help"});
  EXPECT_EQ(help.code, kExitOk);
  EXPECT_NE(help.out.find("evaluate"), std::string::npos);
}

TEST(CliTest, BinarizeWordScores) {
  TempDir dir("cli");
  WriteScores({{"a", "lime", Granularity::kWord, {0.9f, 0.1f, 0.5f, 0.5f}}},
              dir / "s.jsonl");
  const Result r = Invoke({"binarize", (dir / "s.jsonl").string(), "--k", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Explanation e = ExplanationFromJson(FloatJson::parse(r.out));
  EXPECT_EQ(e.word_mask, (WordMask{1, 0, 1, 0}));

  WriteScores({{"a", "ig", Granularity::kToken, {0.1f, 0.2f}}},
              dir / "t.jsonl");
  EXPECT_EQ(Invoke({"binarize", (dir / "t.jsonl").string(), "--k", "1"}).code,
            kExitRuntime);
}

TEST(CliTest, EvaluateThenReport) {
  TempDir dir("cli");
  const auto config = WriteSyntheticExperiment(
      dir.path(), {.examples = 80, .test_examples = 40, .epochs = 20});
  Result r = Invoke({"--seed", "3", "evaluate", config.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  // Header, separator and one row per method.
  std::istringstream lines(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("|", 0) != 0) continue;
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), '|'),
              std::count(r.out.begin(), r.out.begin() + r.out.find('\n'), '|'));
  }
  EXPECT_EQ(rows, 4);
  EXPECT_NE(r.out.find("expnet"), std::string::npos);
  EXPECT_NE(r.out.find("random"), std::string::npos);
  const Json manifest =
      Json::parse(ReadFile(dir / "run" / "syn1" / "manifest.json"));
  EXPECT_EQ(manifest["seeds"]["base"], 3);

  std::filesystem::remove_all(dir / "run" / "html");
  std::filesystem::remove(dir / "run" / "results.md");
  r = Invoke({"report", (dir / "run").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("3 run"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "results.md"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "html" / "index.html"));
  const Json table = Json::parse(ReadFile(dir / "run" / "results.json"));
  EXPECT_EQ(table["datasets"].size(), 3u);
}

TEST(CliTest, TrainExplainAndAgreement) {
  TempDir dir("cli");
  const auto config = WriteSyntheticExperiment(
      dir.path(), {.examples = 60, .test_examples = 20, .epochs = 10});
  Result r = Invoke({"train", config.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto model_path = dir / "run" / "syn1" / "model.json";
  ASSERT_TRUE(std::filesystem::exists(model_path));
  const std::string traces = (dir / "syn1" / "test.jsonl").string();

  r = Invoke({"explain", model_path.string(), traces, "--out",
           (dir / "e.jsonl").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto explanations = LoadExplanations(dir / "e.jsonl");
  EXPECT_EQ(explanations.size(), LoadTraces(traces).size());
  for (const auto& e : explanations) {
    EXPECT_GE(std::count(e.word_mask.begin(), e.word_mask.end(), 1), 1);
  }
  EXPECT_EQ(Invoke({"explain", model_path.string(), traces, "--threshold", "1.5"})
                .code,
            kExitRuntime);

  r = Invoke({"agreement", traces});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("krippendorff_alpha ", 0), 0u);
  EXPECT_NE(r.out.find("annotators 3"), std::string::npos);
}

}  // namespace
}  // namespace expnet
