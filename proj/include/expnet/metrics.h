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

// Plausibility metrics for word-level rationales.
//
// F1 is micro-averaged: TP/FP/FN are summed over every example before the
// ratio is taken. AUROC and AUPR pool every (score, label) pair of the
// dataset into one ranking.

#ifndef EXPNET_METRICS_H_
#define EXPNET_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "expnet/baseline.h"
#include "expnet/common.h"

namespace expnet {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts Accumulate(std::span<const std::uint8_t> predicted,
                           std::span<const std::uint8_t> gold);

struct PrecisionRecallF1 {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Zero denominators: precision is 1 when nothing was predicted and nothing
// was missed, 0 when nothing was predicted but positives exist; recall is
// symmetric. F1 is 0 whenever precision + recall is 0.
PrecisionRecallF1 ScoresFromCounts(const ConfusionCounts& counts);

// Micro-averaged scores over summed counts. Throws on empty input.
PrecisionRecallF1 DatasetF1(std::span<const ConfusionCounts> counts);

struct ScoredLabel {
  double score;
  bool positive;
};

// Probability that a random positive outranks a random negative, ties
// counting one half. Throws when either class is absent.
double PooledAuroc(std::span<const ScoredLabel> pooled);

// Step-wise average precision over descending distinct score thresholds.
// Throws when there is no positive.
double PooledAupr(std::span<const ScoredLabel> pooled);

struct Interval {
  double low = 0;
  double high = 0;
};

// Percentile bootstrap of micro-F1, resampling examples with replacement.
// Replicate r draws from a generator seeded with seed + r.
Interval BootstrapF1Interval(std::span<const ConfusionCounts> per_example,
                             int iterations = 1000, double level = 0.95,
                             std::uint64_t seed = 0);

// Marks an absent annotation in an annotators x items matrix.
inline constexpr int kMissing = -1;

// Nominal Krippendorff's alpha from the coincidence matrix, over items with
// at least two annotations. Values are non-negative category codes.
// Throws when no item is pairable or expected disagreement is zero.
double KrippendorffAlpha(const Eigen::MatrixXi& annotations);

struct ExampleDiagnostics {
  std::string example_id;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

struct EvalReport {
  std::string method_id;
  std::string dataset_id;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double f1_ci_low = 0;
  double f1_ci_high = 0;
  // Absent when the pooled labels lack a class.
  std::optional<double> auroc;
  std::optional<double> aupr;
  std::int64_t n_examples = 0;
  std::int64_t n_words = 0;
  ConfusionCounts totals;
  std::string ci_method = "percentile_bootstrap";
  int ci_iterations = 1000;
  double ci_level = 0.95;
  std::uint64_t ci_seed = 0;
  std::vector<ExampleDiagnostics> per_example;
};

struct BootstrapOptions {
  int iterations = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

// One prediction paired with its gold rationale.
struct EvaluatedExample {
  Explanation explanation;
  WordMask gold;
};

EvalReport Evaluate(const std::string& method_id,
                    const std::string& dataset_id,
                    std::span<const EvaluatedExample> examples,
                    const BootstrapOptions& bootstrap = {});

Json EvalReportToJson(const EvalReport& report);
EvalReport EvalReportFromJson(const Json& object);

}  // namespace expnet

#endif  // EXPNET_METRICS_H_
