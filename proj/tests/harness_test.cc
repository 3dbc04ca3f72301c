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

#include "expnet/harness.h"

#include <random>

#include "expnet/report.h"
#include "expnet/synthetic.h"
#include "fixtures.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "suite.h"

namespace expnet {
namespace {

using ::expnet::testing::MakeTrace;
using ::expnet::testing::SuiteOptions;
using ::expnet::testing::TempDir;
using ::expnet::testing::WriteSyntheticExperiment;
using Mask = std::vector<std::uint8_t>;

AttentionTrace ThreeAnnotators() {
  AttentionTrace t = MakeTrace("m", {0, 1});
  t.rationales = {{"a1", {1, 0}}, {"a2", {1, 1}}, {"a3", {0, 0}}};
  return t;
}

TEST(MergeTest, Policies) {
  const AttentionTrace t = ThreeAnnotators();
  EXPECT_EQ(MergeRationales(t, {}).word_mask, (Mask{1, 0}));
  EXPECT_EQ(MergeRationales(t, {MergePolicy::Kind::kUnion, ""}).word_mask,
            (Mask{1, 1}));
  EXPECT_EQ(
      MergeRationales(t, {MergePolicy::Kind::kSingleAnnotator, "a2"}).word_mask,
      (Mask{1, 1}));
  EXPECT_THROW(MergeRationales(t, {MergePolicy::Kind::kSingleAnnotator, "zz"}),
               ValidationError);
  AttentionTrace bare = t;
  bare.rationales.clear();
  EXPECT_THROW(MergeRationales(bare, {}), ValidationError);
}

TEST(MergeTest, TwoAnnotatorTieIsNotAMajority) {
  AttentionTrace t = MakeTrace("tie", {0, 1});
  t.rationales = {{"a1", {1, 1}}, {"a2", {0, 1}}};
  EXPECT_EQ(MergeRationales(t, {}).word_mask, (Mask{0, 1}));
}

TEST(MergeTest, PolicyJsonRoundTrip) {
  for (const MergePolicy& p :
       {MergePolicy{}, MergePolicy{MergePolicy::Kind::kUnion, ""},
        MergePolicy{MergePolicy::Kind::kSingleAnnotator, "a7"}}) {
    const MergePolicy back = MergePolicy::FromJson(p.ToJson());
    EXPECT_EQ(back.kind, p.kind);
    EXPECT_EQ(back.annotator_id, p.annotator_id);
  }
}

TEST(SpecTest, RejectsTestSetInTraining) {
  TempDir dir("spec");
  const auto config = WriteSyntheticExperiment(dir.path(), {.examples = 20,
                                                            .test_examples = 10});
  auto specs = LoadExperimentSpecs(config);
  ASSERT_EQ(specs.size(), 3u);
  ExperimentSpec bad = specs[0];
  bad.train_dataset_ids.push_back(bad.test_dataset_id);
  try {
    bad.Validate();
    FAIL() << "cross-task leak accepted";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.invariant(), "cross-task");
  }
}

TEST(SpecTest, LeaveOneTaskOutFolds) {
  TempDir dir("spec");
  const auto config = WriteSyntheticExperiment(dir.path(), {.examples = 20,
                                                            .test_examples = 10});
  const auto specs = LoadExperimentSpecs(config, 99);
  ASSERT_EQ(specs.size(), 3u);
  for (const auto& spec : specs) {
    EXPECT_EQ(spec.train_dataset_ids.size(), 2u);
    EXPECT_EQ(std::count(spec.train_dataset_ids.begin(),
                         spec.train_dataset_ids.end(), spec.test_dataset_id),
              0);
    EXPECT_EQ(spec.seed, 99u);
    EXPECT_EQ(spec.output_dir, dir.path() / "run" / spec.test_dataset_id);
    EXPECT_EQ(spec.random_seed(), 100u);
    EXPECT_EQ(spec.bootstrap_seed(), 101u);
  }
}

TEST(ExperimentTest, CrossTaskRunWritesArtifacts) {
  TempDir dir("exp");
  const auto config = WriteSyntheticExperiment(
      dir.path(), {.examples = 120, .test_examples = 60, .epochs = 30});
  const auto specs = LoadExperimentSpecs(config);
  for (const auto& spec : specs) {
    const ExperimentResult result = RunExperiment(spec);
    ASSERT_EQ(result.reports.size(), 2u);
    EXPECT_EQ(result.reports[0].method_id, "expnet");
    EXPECT_GE(result.reports[0].f1, 0.9) << spec.test_dataset_id;
    EXPECT_LT(result.reports[1].f1, 0.6);
    EXPECT_EQ(result.training.model.meta.source_dataset_ids,
              spec.train_dataset_ids);
    for (const auto& t : result.test_traces) {
      EXPECT_EQ(t.label_gold, t.label_pred);
    }
    for (const char* file :
         {"manifest.json", "model.json", "reports/expnet.json",
          "reports/random.json", "explanations/expnet.jsonl",
          "explanations/random.jsonl", "results.md", "html/index.html"}) {
      EXPECT_TRUE(std::filesystem::exists(spec.output_dir / file)) << file;
    }
    const Json manifest = Json::parse(ReadFile(spec.output_dir / "manifest.json"));
    EXPECT_EQ(manifest["seeds"]["train"], spec.train_seed());
    EXPECT_EQ(manifest["seeds"]["random_baseline"], spec.random_seed());
    EXPECT_EQ(manifest["seeds"]["bootstrap"], spec.bootstrap_seed());
    EXPECT_EQ(manifest["counts"]["train_tokens"],
              result.training.model.meta.num_training_tokens);
  }
}

TEST(ExperimentTest, SameSeedGivesIdenticalFiles) {
  TempDir a("det"), b("det");
  const SuiteOptions options{.examples = 60, .test_examples = 30, .epochs = 5};
  const auto config_a = WriteSyntheticExperiment(a.path(), options);
  const auto config_b = WriteSyntheticExperiment(b.path(), options);
  const auto spec_a = LoadExperimentSpecs(config_a).front();
  const auto spec_b = LoadExperimentSpecs(config_b).front();
  RunExperiment(spec_a);
  RunExperiment(spec_b);
  for (const char* file : {"model.json", "manifest.json", "reports/expnet.json",
                           "reports/random.json", "explanations/expnet.jsonl",
                           "results.json"}) {
    EXPECT_EQ(ReadFile(spec_a.output_dir / file),
              ReadFile(spec_b.output_dir / file))
        << file;
  }
}

TEST(ExperimentTest, MissingScoreFileFailsNamingTheStage) {
  TempDir dir("exp");
  const auto config = WriteSyntheticExperiment(
      dir.path(), {.examples = 20, .test_examples = 10, .epochs = 1});
  auto spec = LoadExperimentSpecs(config).front();
  spec.methods.push_back(
      {"ig", {{spec.test_dataset_id, dir.path() / "nope.jsonl"}}});
  try {
    RunExperiment(spec);
    FAIL() << "missing score file accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("stage"), std::string::npos);
  }
}

TEST(RandomBaselineTest, MeanF1MatchesClosedForm) {
  SyntheticSpec s;
  s.n_examples = 300;
  s.seed = 4;
  const auto traces = FilterCorrect(GenerateSynthetic(s));
  double positives = 0, total = 0;
  std::vector<Mask> gold;
  for (const auto& t : traces) {
    gold.push_back(MergeRationales(t, {}).word_mask);
    positives += std::count(gold.back().begin(), gold.back().end(), 1);
    total += static_cast<double>(gold.back().size());
  }
  const double p = 0.3;
  double mean = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::vector<Mask> pred;
    for (const auto& t : traces) pred.push_back(RandomBaseline(t, p, seed).word_mask);
    mean += oracle::ConcatenatedF1(pred, gold) / 50;
  }
  EXPECT_NEAR(mean, oracle::ExpectedRandomF1(p, positives, total), 0.02);
}

TEST(ReportTest, RendersOneExampleWithAbsentMethod) {
  TempDir dir("report");
  AttentionTrace t = MakeTrace("only", {0, 0, 1});
  t.tokens = {"[CLS]", "play", "##ing", "<b>", "[SEP]"};
  EXPECT_EQ(WordStrings(t), (std::vector<std::string>{"playing", "<b>"}));
  Explanation e;
  e.example_id = "only";
  e.method_id = "expnet";
  e.word_scores = {0.9f, 0.1f};
  e.word_mask = {1, 0};
  const std::vector<EvaluatedExample> examples = {{e, {1, 0}}};
  const EvalReport r = Evaluate("expnet", "fixture", examples);
  EvalReport absent = r;
  absent.method_id = "lime";
  ReportDataset ds{"fixture", {t}, {{1, 0}}, {{"expnet", {e}}, {"lime", {}}}};
  RenderReport({r, absent}, {ds}, dir.path());
  const std::string md = ReadFile(dir / "results.md");
  EXPECT_NE(md.find("expnet"), std::string::npos);
  EXPECT_NE(md.find("fixture"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "html/index.html"));
  const std::string page = ReadFile(dir / "html/fixture/only.html");
  EXPECT_NE(page.find("playing"), std::string::npos);
  EXPECT_NE(page.find("absent"), std::string::npos);
  EXPECT_EQ(page.find("<b>"), std::string::npos);  // escaped
  const Json table = Json::parse(ReadFile(dir / "results.json"));
  EXPECT_EQ(table["methods"].size(), 2u);
}

}  // namespace
}  // namespace expnet
