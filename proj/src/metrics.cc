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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace expnet {
namespace {

double Ratio(std::int64_t hit, std::int64_t predicted, std::int64_t missed) {
  if (predicted > 0) {
    return static_cast<double>(hit) / static_cast<double>(predicted);
  }
  return missed == 0 ? 1.0 : 0.0;
}

// Linear interpolation between closest ranks of a sorted sample.
double Quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

ConfusionCounts Accumulate(std::span<const std::uint8_t> predicted,
                           std::span<const std::uint8_t> gold) {
  if (predicted.size() != gold.size()) {
    throw DimensionError("predicted mask has " +
                         std::to_string(predicted.size()) +
                         " words, gold has " + std::to_string(gold.size()));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool g = gold[i] != 0;
    if (p && g) ++c.tp;
    if (p && !g) ++c.fp;
    if (!p && g) ++c.fn;
    if (!p && !g) ++c.tn;
  }
  return c;
}

PrecisionRecallF1 ScoresFromCounts(const ConfusionCounts& c) {
  PrecisionRecallF1 out;
  out.precision = Ratio(c.tp, c.tp + c.fp, c.fn);
  out.recall = Ratio(c.tp, c.tp + c.fn, c.fp);
  if (out.precision + out.recall == 0.0) {
    out.f1 = 0.0;
  } else if (c.tp + c.fp + c.fn == 0) {
    out.f1 = 1.0;
  } else {
    out.f1 = static_cast<double>(2 * c.tp) /
             static_cast<double>(2 * c.tp + c.fp + c.fn);
  }
  return out;
}

PrecisionRecallF1 DatasetF1(std::span<const ConfusionCounts> counts) {
  if (counts.empty()) throw Error("dataset F1 of zero examples");
  ConfusionCounts total;
  for (const auto& c : counts) total += c;
  return ScoresFromCounts(total);
}

double PooledAuroc(std::span<const ScoredLabel> pooled) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pooled[a].score < pooled[b].score;
  });
  double positive_rank_sum = 0;
  std::int64_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::int64_t group_positives = 0;
    while (j < order.size() && pooled[order[j]].score == pooled[order[i]].score) {
      group_positives += pooled[order[j]].positive ? 1 : 0;
      ++j;
    }
    // Ranks i+1..j share their mean.
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    positive_rank_sum += mean_rank * static_cast<double>(group_positives);
    positives += group_positives;
    i = j;
  }
  const auto negatives = static_cast<std::int64_t>(pooled.size()) - positives;
  if (positives == 0 || negatives == 0) {
    throw Error("undefined AUROC: need at least one positive and one negative");
  }
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double PooledAupr(std::span<const ScoredLabel> pooled) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pooled[a].score > pooled[b].score;
  });
  const auto positives = std::count_if(
      pooled.begin(), pooled.end(), [](const ScoredLabel& s) { return s.positive; });
  if (positives == 0) throw Error("undefined AUPR: no positive labels");

  double ap = 0;
  std::int64_t tp = 0;
  std::int64_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::int64_t group_positives = 0;
    while (j < order.size() && pooled[order[j]].score == pooled[order[i]].score) {
      group_positives += pooled[order[j]].positive ? 1 : 0;
      ++j;
    }
    tp += group_positives;
    seen += static_cast<std::int64_t>(j - i);
    if (group_positives > 0) {
      const double precision =
          static_cast<double>(tp) / static_cast<double>(seen);
      ap += precision * static_cast<double>(group_positives) /
            static_cast<double>(positives);
    }
    i = j;
  }
  return ap;
}

Interval BootstrapF1Interval(std::span<const ConfusionCounts> per_example,
                             int iterations, double level,
                             std::uint64_t seed) {
  if (per_example.size() < 2) {
    throw Error("bootstrap needs at least two examples");
  }
  if (iterations < 1) throw Error("bootstrap needs at least one iteration");
  if (!(level > 0 && level < 1)) throw Error("confidence level must be in (0, 1)");
  const std::size_t n = per_example.size();
  std::vector<double> replicates(static_cast<std::size_t>(iterations));
  for (int r = 0; r < iterations; ++r) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    ConfusionCounts total;
    for (std::size_t i = 0; i < n; ++i) total += per_example[pick(rng)];
    replicates[r] = ScoresFromCounts(total).f1;
  }
  std::sort(replicates.begin(), replicates.end());
  const double tail = (1.0 - level) / 2.0;
  return {Quantile(replicates, tail), Quantile(replicates, 1.0 - tail)};
}

double KrippendorffAlpha(const Eigen::MatrixXi& annotations) {
  if (annotations.rows() < 2) {
    throw Error("Krippendorff's alpha needs at least two annotators");
  }
  // Coincidences keyed by category code.
  std::map<int, std::map<int, double>> coincidence;
  for (Eigen::Index item = 0; item < annotations.cols(); ++item) {
    std::map<int, int> counts;
    int pairable = 0;
    for (Eigen::Index a = 0; a < annotations.rows(); ++a) {
      const int v = annotations(a, item);
      if (v == kMissing) continue;
      if (v < 0) throw Error("category codes must be non-negative");
      ++counts[v];
      ++pairable;
    }
    if (pairable < 2) continue;
    const double weight = 1.0 / static_cast<double>(pairable - 1);
    for (const auto& [c, nc] : counts) {
      for (const auto& [k, nk] : counts) {
        const double pairs = c == k ? static_cast<double>(nc) * (nc - 1)
                                    : static_cast<double>(nc) * nk;
        coincidence[c][k] += pairs * weight;
      }
    }
  }
  std::map<int, double> marginals;
  double n = 0;
  double observed = 0;
  for (const auto& [c, row] : coincidence) {
    for (const auto& [k, o] : row) {
      marginals[c] += o;
      n += o;
      if (c != k) observed += o;
    }
  }
  if (n == 0) throw Error("undefined Krippendorff's alpha: no pairable items");
  double expected = 0;
  for (const auto& [c, nc] : marginals) {
    for (const auto& [k, nk] : marginals) {
      if (c != k) expected += nc * nk;
    }
  }
  if (expected == 0) {
    throw Error(
        "undefined Krippendorff's alpha: every pairable value is identical");
  }
  return 1.0 - (n - 1.0) * observed / expected;
}

EvalReport Evaluate(const std::string& method_id,
                    const std::string& dataset_id,
                    std::span<const EvaluatedExample> examples,
                    const BootstrapOptions& bootstrap) {
  if (examples.empty()) {
    throw Error("cannot evaluate method \"" + method_id + "\" on \"" +
                dataset_id + "\": no examples");
  }
  EvalReport report;
  report.method_id = method_id;
  report.dataset_id = dataset_id;
  std::vector<ConfusionCounts> per_example;
  std::vector<ScoredLabel> pooled;
  for (const EvaluatedExample& ex : examples) {
    const Explanation& e = ex.explanation;
    if (e.word_scores.size() != ex.gold.size()) {
      throw DimensionError("example \"" + e.example_id + "\": " +
                           std::to_string(e.word_scores.size()) +
                           " word scores for " +
                           std::to_string(ex.gold.size()) + " gold words");
    }
    const ConfusionCounts c = Accumulate(e.word_mask, ex.gold);
    per_example.push_back(c);
    report.totals += c;
    report.per_example.push_back({e.example_id, c.tp, c.fp, c.fn});
    for (std::size_t w = 0; w < ex.gold.size(); ++w) {
      pooled.push_back({e.word_scores[w], ex.gold[w] != 0});
    }
  }
  const auto prf = ScoresFromCounts(report.totals);
  report.precision = prf.precision;
  report.recall = prf.recall;
  report.f1 = prf.f1;
  report.n_examples = static_cast<std::int64_t>(examples.size());
  report.n_words = report.totals.total();

  report.ci_iterations = bootstrap.iterations;
  report.ci_level = bootstrap.level;
  report.ci_seed = bootstrap.seed;
  if (per_example.size() >= 2) {
    const Interval ci = BootstrapF1Interval(per_example, bootstrap.iterations,
                                            bootstrap.level, bootstrap.seed);
    // Widened to contain the point estimate when the percentile interval
    // does not.
    report.f1_ci_low = std::min(ci.low, report.f1);
    report.f1_ci_high = std::max(ci.high, report.f1);
  } else {
    report.ci_method = "none";
    report.f1_ci_low = report.f1_ci_high = report.f1;
  }

  const bool has_pos = report.totals.tp + report.totals.fn > 0;
  const bool has_neg = report.totals.fp + report.totals.tn > 0;
  if (has_pos && has_neg) report.auroc = PooledAuroc(pooled);
  if (has_pos) report.aupr = PooledAupr(pooled);
  return report;
}

Json EvalReportToJson(const EvalReport& r) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["method_id"] = r.method_id;
  j["dataset_id"] = r.dataset_id;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["f1_ci_low"] = r.f1_ci_low;
  j["f1_ci_high"] = r.f1_ci_high;
  j["auroc"] = r.auroc ? Json(*r.auroc) : Json(nullptr);
  j["aupr"] = r.aupr ? Json(*r.aupr) : Json(nullptr);
  j["n_examples"] = r.n_examples;
  j["n_words"] = r.n_words;
  j["totals"] = {{"tp", r.totals.tp},
                 {"fp", r.totals.fp},
                 {"fn", r.totals.fn},
                 {"tn", r.totals.tn}};
  j["ci"] = {{"method", r.ci_method},
             {"iterations", r.ci_iterations},
             {"level", r.ci_level},
             {"seed", r.ci_seed}};
  Json per_example = Json::array();
  for (const auto& d : r.per_example) {
    per_example.push_back(
        {{"example_id", d.example_id}, {"tp", d.tp}, {"fp", d.fp}, {"fn", d.fn}});
  }
  j["per_example"] = std::move(per_example);
  return j;
}

EvalReport EvalReportFromJson(const Json& j) {
  CheckFormatVersion(j);
  EvalReport r;
  r.method_id = Field<std::string>(j, "method_id");
  r.dataset_id = Field<std::string>(j, "dataset_id");
  r.precision = Field<double>(j, "precision");
  r.recall = Field<double>(j, "recall");
  r.f1 = Field<double>(j, "f1");
  r.f1_ci_low = Field<double>(j, "f1_ci_low");
  r.f1_ci_high = Field<double>(j, "f1_ci_high");
  if (!j.at("auroc").is_null()) r.auroc = j.at("auroc").get<double>();
  if (!j.at("aupr").is_null()) r.aupr = j.at("aupr").get<double>();
  r.n_examples = Field<std::int64_t>(j, "n_examples");
  r.n_words = Field<std::int64_t>(j, "n_words");
  const Json& t = j.at("totals");
  r.totals = {t.at("tp").get<std::int64_t>(), t.at("fp").get<std::int64_t>(),
              t.at("fn").get<std::int64_t>(), t.at("tn").get<std::int64_t>()};
  const Json& ci = j.at("ci");
  r.ci_method = ci.at("method").get<std::string>();
  r.ci_iterations = ci.at("iterations").get<int>();
  r.ci_level = ci.at("level").get<double>();
  r.ci_seed = ci.at("seed").get<std::uint64_t>();
  for (const auto& d : j.at("per_example")) {
    r.per_example.push_back({d.at("example_id").get<std::string>(),
                             d.at("tp").get<std::int64_t>(),
                             d.at("fp").get<std::int64_t>(),
                             d.at("fn").get<std::int64_t>()});
  }
  return r;
}

}  // namespace expnet
