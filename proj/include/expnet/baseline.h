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

// Explanations at token and word granularity, and the adapter that turns
// external attribution scores into binary word rationales.

#ifndef EXPNET_BASELINE_H_
#define EXPNET_BASELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "expnet/common.h"
#include "expnet/trace.h"

namespace expnet {

enum class Granularity { kToken, kWord };

std::string GranularityName(Granularity granularity);
Granularity ParseGranularity(const std::string& name);

// Continuous scores from one explainer for one example.
struct ScoreRecord {
  std::string example_id;
  std::string method_id;
  Granularity granularity = Granularity::kToken;
  // May be negative.
  std::vector<float> scores;
};

struct Explanation {
  std::string example_id;
  std::string method_id;
  // Length T when present. Purely binary methods leave it empty.
  std::optional<std::vector<float>> token_scores;
  std::vector<float> word_scores;
  WordMask word_mask;

  bool operator==(const Explanation&) const = default;
};

// word_scores[w] = max of token_scores over the tokens of word w. Tokens
// without a word id are ignored.
std::vector<float> AggregateToWords(const AttentionTrace& trace,
                                    std::span<const float> token_scores);

// Selects the k highest non-negative scores. Strictly negative scores are
// never selected. Ties go to the earlier position; the position index also
// stands in for the vocabulary id in the secondary tie rule, so the order is
// total. With fewer than k non-negative candidates all of them are selected.
WordMask BinarizeTopK(std::span<const float> word_scores, int k);

// Marks each word important independently with probability `positive_rate`.
// The draw sequence is a function of (example_id, seed) only.
Explanation RandomBaseline(const AttentionTrace& trace, double positive_rate,
                           std::uint64_t seed);

// Word-level explanation for an external score record: aggregate token
// scores by max (word records pass through) and binarize with k.
Explanation ExplainFromScores(const AttentionTrace& trace,
                              const ScoreRecord& record, int k);

FloatJson ScoreRecordToJson(const ScoreRecord& record);
ScoreRecord ScoreRecordFromJson(const FloatJson& object);

// Parses a score file without checking it against traces.
std::vector<ScoreRecord> ParseScores(const std::filesystem::path& path);

// Parses a score file and checks every record against `traces`: the id must
// exist and the length must match the token or word count.
std::vector<ScoreRecord> LoadScores(
    const std::filesystem::path& path,
    const std::map<std::string, const AttentionTrace*>& traces);

void WriteScores(const std::vector<ScoreRecord>& records,
                 const std::filesystem::path& path);

FloatJson ExplanationToJson(const Explanation& explanation);
Explanation ExplanationFromJson(const FloatJson& object);

std::vector<Explanation> LoadExplanations(const std::filesystem::path& path);
void WriteExplanations(const std::vector<Explanation>& explanations,
                       const std::filesystem::path& path);

// Index of traces by example id. Throws on duplicate ids.
std::map<std::string, const AttentionTrace*> IndexTraces(
    const std::vector<AttentionTrace>& traces);

}  // namespace expnet

#endif  // EXPNET_BASELINE_H_
