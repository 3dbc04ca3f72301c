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

#include "expnet/baseline.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace expnet {
namespace {

template <typename Record, typename FromJson>
std::vector<Record> ParseLines(const std::filesystem::path& path,
                               FromJson from_json) {
  const std::string text = ReadFile(path);
  std::vector<Record> out;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(lines, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(from_json(FloatJson::parse(line)));
    } catch (const VersionError&) {
      throw;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, line_number, e.what());
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(path, line_number, e.what());
    }
  }
  return out;
}

FloatJson FloatVector(std::span<const float> values) {
  FloatJson out = FloatJson::array();
  for (float v : values) out.push_back(v);
  return out;
}

std::vector<float> ReadFloats(const FloatJson& array, const char* key) {
  if (!array.is_array()) {
    throw Error(std::string("field \"") + key + "\" is not an array");
  }
  std::vector<float> out;
  out.reserve(array.size());
  for (const auto& v : array) {
    if (!v.is_number()) {
      throw Error(std::string("field \"") + key + "\" holds a non-number");
    }
    out.push_back(v.get<float>());
  }
  return out;
}

}  // namespace

std::string GranularityName(Granularity granularity) {
  return granularity == Granularity::kToken ? "token" : "word";
}

Granularity ParseGranularity(const std::string& name) {
  if (name == "token") return Granularity::kToken;
  if (name == "word") return Granularity::kWord;
  throw Error("unknown granularity \"" + name + "\"");
}

std::vector<float> AggregateToWords(const AttentionTrace& trace,
                                    std::span<const float> token_scores) {
  if (static_cast<int>(token_scores.size()) != trace.num_tokens()) {
    throw DimensionError("example \"" + trace.example_id + "\": " +
                         std::to_string(token_scores.size()) +
                         " token scores for " +
                         std::to_string(trace.num_tokens()) + " tokens");
  }
  std::vector<float> words(trace.num_words(),
                           -std::numeric_limits<float>::infinity());
  for (int j = 0; j < trace.num_tokens(); ++j) {
    if (!trace.word_ids[j]) continue;
    float& w = words[*trace.word_ids[j]];
    w = std::max(w, token_scores[j]);
  }
  return words;
}

WordMask BinarizeTopK(std::span<const float> word_scores, int k) {
  if (k < 1) throw Error("top-k binarization needs k >= 1");
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < word_scores.size(); ++i) {
    if (!(word_scores[i] < 0.0f) && !std::isnan(word_scores[i])) {
      candidates.push_back(i);
    }
  }
  // Descending score, then ascending position. Position doubles as the
  // secondary id key, so no two candidates compare equal.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) {
                     return word_scores[a] > word_scores[b];
                   });
  const std::size_t keep =
      std::min(candidates.size(), static_cast<std::size_t>(k));
  WordMask mask(word_scores.size(), 0);
  for (std::size_t i = 0; i < keep; ++i) mask[candidates[i]] = 1;
  return mask;
}

Explanation RandomBaseline(const AttentionTrace& trace, double positive_rate,
                           std::uint64_t seed) {
  if (!(positive_rate >= 0.0 && positive_rate <= 1.0)) {
    throw Error("positive_rate must lie in [0, 1]");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(Fnv1a(trace.example_id)),
                    static_cast<std::uint32_t>(Fnv1a(trace.example_id) >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Explanation out;
  out.example_id = trace.example_id;
  out.method_id = "random";
  const int num_words = trace.num_words();
  out.word_mask.resize(num_words);
  out.word_scores.resize(num_words);
  for (int w = 0; w < num_words; ++w) {
    // unit() < 1 always, so rate 1 selects every word and rate 0 none.
    out.word_mask[w] = unit(rng) < positive_rate ? 1 : 0;
    out.word_scores[w] = static_cast<float>(out.word_mask[w]);
  }
  return out;
}

Explanation ExplainFromScores(const AttentionTrace& trace,
                              const ScoreRecord& record, int k) {
  Explanation out;
  out.example_id = record.example_id;
  out.method_id = record.method_id;
  if (record.granularity == Granularity::kToken) {
    out.word_scores = AggregateToWords(trace, record.scores);
    out.token_scores = record.scores;
  } else {
    if (static_cast<int>(record.scores.size()) != trace.num_words()) {
      throw DimensionError("example \"" + trace.example_id + "\": " +
                           std::to_string(record.scores.size()) +
                           " word scores for " +
                           std::to_string(trace.num_words()) + " words");
    }
    out.word_scores = record.scores;
  }
  out.word_mask = BinarizeTopK(out.word_scores, k);
  return out;
}

FloatJson ScoreRecordToJson(const ScoreRecord& record) {
  FloatJson j;
  j["format_version"] = kFormatVersion;
  j["example_id"] = record.example_id;
  j["method_id"] = record.method_id;
  j["granularity"] = GranularityName(record.granularity);
  j["scores"] = FloatVector(record.scores);
  return j;
}

ScoreRecord ScoreRecordFromJson(const FloatJson& object) {
  CheckFormatVersion(object);
  ScoreRecord record;
  record.example_id = Field<std::string>(object, "example_id");
  record.method_id = Field<std::string>(object, "method_id");
  record.granularity =
      ParseGranularity(Field<std::string>(object, "granularity"));
  record.scores = ReadFloats(object.at("scores"), "scores");
  for (float s : record.scores) {
    if (!std::isfinite(s)) {
      throw ValidationError("score-finite", record.example_id,
                            "scores must be finite");
    }
  }
  return record;
}

std::vector<ScoreRecord> ParseScores(const std::filesystem::path& path) {
  return ParseLines<ScoreRecord>(path, ScoreRecordFromJson);
}

std::vector<ScoreRecord> LoadScores(
    const std::filesystem::path& path,
    const std::map<std::string, const AttentionTrace*>& traces) {
  std::vector<ScoreRecord> records = ParseScores(path);
  for (const ScoreRecord& r : records) {
    auto it = traces.find(r.example_id);
    if (it == traces.end()) {
      throw ValidationError("score-example-id", r.example_id,
                            "no trace with this example_id");
    }
    const AttentionTrace& trace = *it->second;
    const int expected = r.granularity == Granularity::kToken
                             ? trace.num_tokens()
                             : trace.num_words();
    if (static_cast<int>(r.scores.size()) != expected) {
      throw ValidationError(
          "score-length", r.example_id,
          std::to_string(r.scores.size()) + " " +
              GranularityName(r.granularity) + " scores, expected " +
              std::to_string(expected));
    }
  }
  return records;
}

void WriteScores(const std::vector<ScoreRecord>& records,
                 const std::filesystem::path& path) {
  std::string out;
  for (const ScoreRecord& r : records) {
    out += ScoreRecordToJson(r).dump();
    out += '\n';
  }
  WriteFile(path, out);
}

FloatJson ExplanationToJson(const Explanation& explanation) {
  FloatJson j;
  j["format_version"] = kFormatVersion;
  j["example_id"] = explanation.example_id;
  j["method_id"] = explanation.method_id;
  if (explanation.token_scores) {
    j["token_scores"] = FloatVector(*explanation.token_scores);
  }
  j["word_scores"] = FloatVector(explanation.word_scores);
  FloatJson mask = FloatJson::array();
  for (auto bit : explanation.word_mask) mask.push_back(static_cast<int>(bit));
  j["word_mask"] = std::move(mask);
  return j;
}

Explanation ExplanationFromJson(const FloatJson& object) {
  CheckFormatVersion(object);
  Explanation e;
  e.example_id = Field<std::string>(object, "example_id");
  e.method_id = Field<std::string>(object, "method_id");
  if (auto it = object.find("token_scores"); it != object.end()) {
    e.token_scores = ReadFloats(*it, "token_scores");
  }
  e.word_scores = ReadFloats(object.at("word_scores"), "word_scores");
  for (const auto& bit : object.at("word_mask")) {
    const int v = bit.get<int>();
    if (v != 0 && v != 1) throw Error("word_mask entries must be 0 or 1");
    e.word_mask.push_back(static_cast<std::uint8_t>(v));
  }
  if (e.word_mask.size() != e.word_scores.size()) {
    throw ValidationError("explanation-length", e.example_id,
                          "word_mask and word_scores differ in length");
  }
  return e;
}

std::vector<Explanation> LoadExplanations(const std::filesystem::path& path) {
  return ParseLines<Explanation>(path, ExplanationFromJson);
}

void WriteExplanations(const std::vector<Explanation>& explanations,
                       const std::filesystem::path& path) {
  std::string out;
  for (const Explanation& e : explanations) {
    out += ExplanationToJson(e).dump();
    out += '\n';
  }
  WriteFile(path, out);
}

std::map<std::string, const AttentionTrace*> IndexTraces(
    const std::vector<AttentionTrace>& traces) {
  std::map<std::string, const AttentionTrace*> index;
  for (const AttentionTrace& t : traces) {
    if (!index.emplace(t.example_id, &t).second) {
      throw ValidationError("example-id-unique", t.example_id,
                            "duplicate example_id");
    }
  }
  return index;
}

}  // namespace expnet
