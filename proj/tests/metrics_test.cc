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

#include "expnet/metrics.h"

#include <random>

#include "gtest/gtest.h"
#include "oracles.h"

namespace expnet {
namespace {

using Mask = std::vector<std::uint8_t>;

std::vector<ScoredLabel> Pool(const std::vector<double>& scores,
                              const std::vector<bool>& labels) {
  std::vector<ScoredLabel> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.push_back({scores[i], labels[i]});
  }
  return out;
}

TEST(CountsTest, Accumulate) {
  const Mask pred = {1, 1, 0}, gold = {1, 0, 1};
  const ConfusionCounts c = Accumulate(pred, gold);
  EXPECT_EQ(c, (ConfusionCounts{1, 1, 1, 0}));
  EXPECT_THROW(Accumulate(pred, Mask{1, 0}), DimensionError);
}

TEST(F1Test, MicroAveragesOverExamples) {
  const std::vector<ConfusionCounts> counts = {{1, 1, 0, 3}, {1, 0, 1, 2}};
  const auto prf = DatasetF1(counts);
  EXPECT_DOUBLE_EQ(prf.precision, 2.0 / 3);
  EXPECT_DOUBLE_EQ(prf.recall, 2.0 / 3);
  EXPECT_DOUBLE_EQ(prf.f1, 4.0 / 6);
  EXPECT_THROW(DatasetF1(std::vector<ConfusionCounts>{}), Error);
}

TEST(F1Test, ZeroDenominatorConventions) {
  // Nothing predicted, nothing to find.
  auto prf = ScoresFromCounts({0, 0, 0, 5});
  EXPECT_EQ(prf.precision, 1.0);
  EXPECT_EQ(prf.recall, 1.0);
  EXPECT_EQ(prf.f1, 1.0);
  // Nothing predicted, positives missed.
  prf = ScoresFromCounts({0, 0, 3, 2});
  EXPECT_EQ(prf.precision, 0.0);
  EXPECT_EQ(prf.recall, 0.0);
  EXPECT_EQ(prf.f1, 0.0);
  // Predictions but no positives.
  prf = ScoresFromCounts({0, 2, 0, 2});
  EXPECT_EQ(prf.precision, 0.0);
  EXPECT_EQ(prf.recall, 0.0);
  EXPECT_EQ(prf.f1, 0.0);
}

TEST(F1Test, MatchesConcatenatedOracle) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> len(1, 12), examples(1, 6);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Mask> pred, gold;
    std::vector<ConfusionCounts> counts;
    for (int e = examples(rng); e > 0; --e) {
      Mask p(len(rng)), g(p.size());
      for (auto& b : p) b = coin(rng);
      for (auto& b : g) b = coin(rng);
      counts.push_back(Accumulate(p, g));
      pred.push_back(p);
      gold.push_back(g);
    }
    EXPECT_NEAR(DatasetF1(counts).f1, oracle::ConcatenatedF1(pred, gold),
                1e-12);
  }
}

TEST(AurocTest, WorkedExamples) {
  EXPECT_DOUBLE_EQ(
      PooledAuroc(Pool({0.1, 0.4, 0.35, 0.8}, {false, false, true, true})),
      0.75);
  EXPECT_DOUBLE_EQ(PooledAuroc(Pool({0.1, 0.9}, {false, true})), 1.0);
  EXPECT_DOUBLE_EQ(PooledAuroc(Pool({0.5, 0.5, 0.5}, {false, true, true})),
                   0.5);
  EXPECT_THROW(PooledAuroc(Pool({0.1, 0.2}, {true, true})), Error);
  EXPECT_THROW(PooledAuroc(Pool({0.1, 0.2}, {false, false})), Error);
}

TEST(AurocTest, MatchesPairCountAndTrapezoid) {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> len(2, 40), grid(0, 6);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> scores(len(rng));
    std::vector<bool> labels(scores.size());
    for (auto& s : scores) s = grid(rng) / 6.0;
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = coin(rng);
    labels[0] = true;
    labels[1] = false;
    const double auroc = PooledAuroc(Pool(scores, labels));
    EXPECT_NEAR(auroc, oracle::PairCountAuroc(scores, labels), 1e-12);
    EXPECT_NEAR(auroc, oracle::TrapezoidAuroc(scores, labels), 1e-12);
  }
}

TEST(AurocTest, InvariantUnderMonotoneTransformAndPermutation) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> unit(0, 1);
  std::vector<double> scores(50);
  std::vector<bool> labels(50);
  for (int i = 0; i < 50; ++i) {
    scores[i] = unit(rng);
    labels[i] = i % 3 == 0;
  }
  const double base = PooledAuroc(Pool(scores, labels));
  std::vector<double> warped = scores;
  for (auto& s : warped) s = std::exp(3 * s) - 7;
  EXPECT_NEAR(PooledAuroc(Pool(warped, labels)), base, 1e-12);
  auto pooled = Pool(scores, labels);
  std::shuffle(pooled.begin(), pooled.end(), rng);
  EXPECT_NEAR(PooledAuroc(pooled), base, 1e-12);
  EXPECT_NEAR(PooledAupr(pooled), PooledAupr(Pool(scores, labels)), 1e-12);
}

TEST(AuprTest, WorkedExamples) {
  EXPECT_DOUBLE_EQ(PooledAupr(Pool({0.9, 0.8, 0.1}, {true, true, false})),
                   1.0);
  // A single positive ranked last among n.
  for (int n : {2, 5, 10}) {
    std::vector<double> scores;
    std::vector<bool> labels;
    for (int i = 0; i < n; ++i) {
      scores.push_back(n - i);
      labels.push_back(i == n - 1);
    }
    EXPECT_DOUBLE_EQ(PooledAupr(Pool(scores, labels)), 1.0 / n);
  }
  EXPECT_THROW(PooledAupr(Pool({0.3}, {false})), Error);
}

TEST(AuprTest, MatchesBruteForce) {
  std::mt19937_64 rng(34);
  std::uniform_int_distribution<int> len(1, 30), grid(0, 5);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> scores(len(rng));
    std::vector<bool> labels(scores.size());
    for (auto& s : scores) s = grid(rng) * 0.2;
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = coin(rng);
    labels[0] = true;
    EXPECT_NEAR(PooledAupr(Pool(scores, labels)),
                oracle::BruteAveragePrecision(scores, labels), 1e-12);
  }
}

TEST(BootstrapTest, IdenticalExamplesGiveDegenerateInterval) {
  const std::vector<ConfusionCounts> counts(10, ConfusionCounts{2, 1, 1, 3});
  const Interval ci = BootstrapF1Interval(counts, 200, 0.95, 5);
  EXPECT_NEAR(ci.low, 2.0 / 3, 1e-12);
  EXPECT_NEAR(ci.high, 2.0 / 3, 1e-12);
}

TEST(BootstrapTest, SameSeedSameIntervalAndOrdered) {
  std::vector<ConfusionCounts> counts;
  for (int i = 0; i < 40; ++i) counts.push_back({i % 4, i % 3, i % 5, 2});
  const Interval a = BootstrapF1Interval(counts, 500, 0.95, 17);
  const Interval b = BootstrapF1Interval(counts, 500, 0.95, 17);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  EXPECT_LT(a.low, a.high);
  const Interval narrow = BootstrapF1Interval(counts, 500, 0.5, 17);
  EXPECT_GE(narrow.low, a.low);
  EXPECT_LE(narrow.high, a.high);
}

TEST(KrippendorffTest, PerfectAgreementIsOne) {
  Eigen::MatrixXi data(3, 6);
  data << 0, 1, 1, 0, 0, 1,  //
      0, 1, 1, 0, 0, 1,      //
      0, 1, 1, 0, 0, 1;
  EXPECT_EQ(KrippendorffAlpha(data), 1.0);
}

TEST(KrippendorffTest, SystematicDisagreement) {
  Eigen::MatrixXi data(2, 4);
  data << 0, 1, 0, 1,  //
      1, 0, 1, 0;
  EXPECT_NEAR(KrippendorffAlpha(data), -0.75, 1e-12);
  EXPECT_NEAR(oracle::PairwiseKrippendorffAlpha(data), -0.75, 1e-12);
}

TEST(KrippendorffTest, MatchesPairwiseOracleWithMissingValues) {
  std::mt19937_64 rng(35);
  std::uniform_int_distribution<int> annotators(2, 5), items(2, 25),
      value(-1, 2);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::MatrixXi data(annotators(rng), items(rng));
    data = data.unaryExpr([&](int) { return value(rng); });
    double expected;
    try {
      expected = oracle::PairwiseKrippendorffAlpha(data);
      if (!std::isfinite(expected)) continue;
    } catch (...) {
      continue;
    }
    double alpha;
    try {
      alpha = KrippendorffAlpha(data);
    } catch (const Error&) {
      continue;
    }
    EXPECT_NEAR(alpha, expected, 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 200);
}

TEST(KrippendorffTest, InvariantUnderAnnotatorAndItemPermutation) {
  std::mt19937_64 rng(36);
  std::uniform_int_distribution<int> value(0, 1);
  Eigen::MatrixXi data(4, 30);
  data = data.unaryExpr([&](int) { return value(rng); });
  const double base = KrippendorffAlpha(data);
  Eigen::MatrixXi swapped = data.colwise().reverse();
  EXPECT_NEAR(KrippendorffAlpha(swapped), base, 1e-12);
  swapped = data.rowwise().reverse();
  EXPECT_NEAR(KrippendorffAlpha(swapped), base, 1e-12);
}

TEST(KrippendorffTest, DegenerateInputsThrow) {
  EXPECT_THROW(KrippendorffAlpha(Eigen::MatrixXi::Zero(1, 5)), Error);
  EXPECT_THROW(KrippendorffAlpha(Eigen::MatrixXi::Zero(3, 5)), Error);
  EXPECT_THROW(KrippendorffAlpha(Eigen::MatrixXi::Constant(3, 5, kMissing)),
               Error);
}

Explanation Binary(const std::string& id, const Mask& mask) {
  Explanation e;
  e.example_id = id;
  e.method_id = "m";
  e.word_mask = mask;
  e.word_scores.assign(mask.begin(), mask.end());
  return e;
}

TEST(EvaluateTest, ReportFieldsAndConventions) {
  const std::vector<EvaluatedExample> examples = {
      {Binary("a", {1, 1, 0}), {1, 0, 1}},
      {Binary("b", {0, 1}), {0, 1}},
  };
  const EvalReport r = Evaluate("m", "d", examples, {100, 0.9, 3});
  EXPECT_EQ(r.totals, (ConfusionCounts{2, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(r.f1, 4.0 / 6);
  EXPECT_LE(r.f1_ci_low, r.f1);
  EXPECT_GE(r.f1_ci_high, r.f1);
  EXPECT_EQ(r.n_examples, 2);
  EXPECT_EQ(r.n_words, 5);
  EXPECT_EQ(r.ci_iterations, 100);
  EXPECT_EQ(r.ci_seed, 3u);
  ASSERT_EQ(r.per_example.size(), 2u);
  EXPECT_EQ(r.per_example[0].fn, 1);
  ASSERT_TRUE(r.auroc.has_value());
  ASSERT_TRUE(r.aupr.has_value());

  const EvalReport back = EvalReportFromJson(EvalReportToJson(r));
  EXPECT_EQ(EvalReportToJson(back).dump(), EvalReportToJson(r).dump());
}

TEST(EvaluateTest, SingleExampleAndMissingClasses) {
  const std::vector<EvaluatedExample> one = {{Binary("a", {0, 0}), {0, 0}}};
  const EvalReport r = Evaluate("m", "d", one);
  EXPECT_EQ(r.ci_method, "none");
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_FALSE(r.auroc.has_value());
  EXPECT_FALSE(r.aupr.has_value());
  EXPECT_TRUE(EvalReportToJson(r)["auroc"].is_null());
  EXPECT_THROW(Evaluate("m", "d", std::vector<EvaluatedExample>{}), Error);
  const std::vector<EvaluatedExample> bad = {{Binary("a", {0}), {0, 1}}};
  EXPECT_THROW(Evaluate("m", "d", bad), DimensionError);
}

}  // namespace
}  // namespace expnet
