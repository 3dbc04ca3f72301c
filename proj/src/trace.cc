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

#include "expnet/trace.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace expnet {
namespace {

std::string Describe(int h, int j) {
  return "head " + std::to_string(h) + ", token " + std::to_string(j);
}

Eigen::MatrixXf MatrixFromJson(const FloatJson& rows, const char* key,
                               int num_heads, int num_tokens,
                               const std::string& example_id) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != num_heads) {
    throw DimensionError("example \"" + example_id + "\": " + key +
                         " must have num_heads = " + std::to_string(num_heads) +
                         " rows");
  }
  Eigen::MatrixXf m(num_heads, num_tokens);
  for (int h = 0; h < num_heads; ++h) {
    const FloatJson& row = rows[h];
    if (!row.is_array() || static_cast<int>(row.size()) != num_tokens) {
      throw DimensionError("example \"" + example_id + "\": " + key + " row " +
                           std::to_string(h) + " must have " +
                           std::to_string(num_tokens) + " entries");
    }
    for (int j = 0; j < num_tokens; ++j) {
      // JSON null is how a non-finite value would have been written.
      m(h, j) = row[j].is_number() ? row[j].get<float>() : std::nanf("");
    }
  }
  return m;
}

FloatJson MatrixToJson(const Eigen::MatrixXf& m) {
  FloatJson rows = FloatJson::array();
  for (Eigen::Index h = 0; h < m.rows(); ++h) {
    FloatJson row = FloatJson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(h, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

int AttentionTrace::num_words() const {
  int max_id = -1;
  for (const auto& id : word_ids) {
    if (id) max_id = std::max(max_id, *id);
  }
  return max_id + 1;
}

bool AttentionTrace::operator==(const AttentionTrace& other) const {
  auto same_matrix = [](const Eigen::MatrixXf& a, const Eigen::MatrixXf& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return std::equal(a.data(), a.data() + a.size(), b.data(),
                      [](float x, float y) {
                        return std::memcmp(&x, &y, sizeof(float)) == 0;
                      });
  };
  return example_id == other.example_id && dataset_id == other.dataset_id &&
         tokens == other.tokens && cls_index == other.cls_index &&
         word_ids == other.word_ids &&
         same_matrix(attn_task_to_token, other.attn_task_to_token) &&
         same_matrix(attn_token_to_task, other.attn_token_to_task) &&
         label_gold == other.label_gold && label_pred == other.label_pred &&
         rationales == other.rationales;
}

std::string SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "unknown";
}

Split ParseSplit(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw Error("unknown split \"" + name + "\"");
}

void ValidateTrace(const AttentionTrace& trace) {
  const std::string& id = trace.example_id;
  auto fail = [&](const char* invariant, const std::string& detail) {
    throw ValidationError(invariant, id, detail);
  };

  if (id.empty()) fail("example-id", "example_id is empty");
  const int num_tokens = trace.num_tokens();
  const int num_heads = trace.num_heads();
  if (num_tokens == 0) fail("tokens", "sequence has no tokens");
  if (num_heads == 0) fail("num-heads", "trace has no attention heads");
  if (static_cast<int>(trace.word_ids.size()) != num_tokens) {
    fail("word-ids-length", "word_ids has " +
                                std::to_string(trace.word_ids.size()) +
                                " entries for " + std::to_string(num_tokens) +
                                " tokens");
  }
  if (trace.attn_task_to_token.cols() != num_tokens ||
      trace.attn_token_to_task.rows() != num_heads ||
      trace.attn_token_to_task.cols() != num_tokens) {
    fail("attention-shape", "attention matrices must both be H x T");
  }
  if (trace.cls_index < 0 || trace.cls_index >= num_tokens) {
    fail("cls-index", "cls_index " + std::to_string(trace.cls_index) +
                          " outside [0, " + std::to_string(num_tokens) + ")");
  }
  if (trace.word_ids[trace.cls_index].has_value()) {
    fail("cls-word-id", "the aggregation token must have a null word id");
  }

  for (const Eigen::MatrixXf* m :
       {&trace.attn_task_to_token, &trace.attn_token_to_task}) {
    for (int h = 0; h < num_heads; ++h) {
      for (int j = 0; j < num_tokens; ++j) {
        const float v = (*m)(h, j);
        if (!(v >= 0.0f && v <= 1.0f)) {
          std::ostringstream detail;
          detail << "attention value " << v << " at " << Describe(h, j)
                 << " outside [0, 1]";
          fail("attention-range", detail.str());
        }
      }
    }
  }
  for (int h = 0; h < num_heads; ++h) {
    double sum = 0.0;
    for (int j = 0; j < num_tokens; ++j) sum += trace.attn_task_to_token(h, j);
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream detail;
      detail << "attn_task_to_token row " << h << " sums to " << sum;
      fail("row-stochastic", detail.str());
    }
  }
  for (int h = 0; h < num_heads; ++h) {
    const float a = trace.attn_task_to_token(h, trace.cls_index);
    const float b = trace.attn_token_to_task(h, trace.cls_index);
    if (std::abs(a - b) > kSelfAttentionTolerance) {
      fail("cls-self-attention",
           "the two self-attention entries differ in head " +
               std::to_string(h));
    }
  }

  int expected_next = 0;
  int last = -1;
  for (int j = 0; j < num_tokens; ++j) {
    if (!trace.word_ids[j]) continue;
    const int w = *trace.word_ids[j];
    if (w < last) {
      fail("word-ids-monotone", "word_ids decrease at token " +
                                    std::to_string(j));
    }
    if (w != last) {
      if (w != expected_next) {
        fail("word-ids-gap", "gap in word indices at token " +
                                 std::to_string(j) + " (expected " +
                                 std::to_string(expected_next) + ", got " +
                                 std::to_string(w) + ")");
      }
      ++expected_next;
      last = w;
    }
  }
  if (expected_next == 0) fail("word-ids-empty", "no token maps to a word");

  const auto num_words = static_cast<std::size_t>(expected_next);
  for (const Rationale& r : trace.rationales) {
    if (r.mask.size() != num_words) {
      fail("rationale-length", "rationale of annotator \"" + r.annotator_id +
                                   "\" has " + std::to_string(r.mask.size()) +
                                   " entries for " +
                                   std::to_string(num_words) + " words");
    }
    for (auto bit : r.mask) {
      if (bit > 1) {
        fail("rationale-binary", "rationale of annotator \"" +
                                     r.annotator_id + "\" is not binary");
      }
    }
  }
}

AttentionTrace TraceFromJson(const FloatJson& record) {
  if (!record.is_object()) throw Error("record is not a JSON object");
  CheckFormatVersion(record);

  AttentionTrace trace;
  trace.example_id = Field<std::string>(record, "example_id");
  trace.dataset_id = Field<std::string>(record, "dataset_id");
  trace.tokens = Field<std::vector<std::string>>(record, "tokens");
  trace.cls_index = Field<int>(record, "cls_index");
  trace.label_gold = Field<int>(record, "label_gold");
  trace.label_pred = Field<int>(record, "label_pred");

  const auto& word_ids = record.at("word_ids");
  if (!word_ids.is_array()) throw Error("field \"word_ids\" is not an array");
  for (const auto& id : word_ids) {
    if (id.is_null()) {
      trace.word_ids.emplace_back(std::nullopt);
    } else if (id.is_number_integer()) {
      trace.word_ids.emplace_back(id.get<int>());
    } else {
      throw Error("field \"word_ids\" must hold integers or null");
    }
  }

  const int num_heads = Field<int>(record, "num_heads");
  if (num_heads <= 0) {
    throw DimensionError("example \"" + trace.example_id +
                         "\": num_heads must be positive");
  }
  const int num_tokens = trace.num_tokens();
  if (static_cast<int>(trace.word_ids.size()) != num_tokens) {
    throw DimensionError("example \"" + trace.example_id + "\": word_ids has " +
                         std::to_string(trace.word_ids.size()) +
                         " entries for " + std::to_string(num_tokens) +
                         " tokens");
  }
  trace.attn_task_to_token =
      MatrixFromJson(record.at("attn_task_to_token"), "attn_task_to_token",
                     num_heads, num_tokens, trace.example_id);
  trace.attn_token_to_task =
      MatrixFromJson(record.at("attn_token_to_task"), "attn_token_to_task",
                     num_heads, num_tokens, trace.example_id);

  for (const auto& r : record.at("rationales")) {
    Rationale rationale;
    rationale.annotator_id = Field<std::string>(r, "annotator_id");
    for (const auto& bit : r.at("mask")) {
      if (!bit.is_number_integer()) {
        throw Error("rationale mask entries must be 0 or 1");
      }
      const auto value = bit.get<std::int64_t>();
      rationale.mask.push_back(value == 0 || value == 1
                                   ? static_cast<std::uint8_t>(value)
                                   : std::uint8_t{2});
    }
    trace.rationales.push_back(std::move(rationale));
  }
  return trace;
}

FloatJson TraceToJson(const AttentionTrace& trace) {
  FloatJson record;
  record["format_version"] = kFormatVersion;
  record["example_id"] = trace.example_id;
  record["dataset_id"] = trace.dataset_id;
  record["tokens"] = trace.tokens;
  record["cls_index"] = trace.cls_index;
  FloatJson word_ids = FloatJson::array();
  for (const auto& id : trace.word_ids) {
    word_ids.push_back(id ? FloatJson(*id) : FloatJson(nullptr));
  }
  record["word_ids"] = std::move(word_ids);
  record["num_heads"] = trace.num_heads();
  record["attn_task_to_token"] = MatrixToJson(trace.attn_task_to_token);
  record["attn_token_to_task"] = MatrixToJson(trace.attn_token_to_task);
  record["label_gold"] = trace.label_gold;
  record["label_pred"] = trace.label_pred;
  FloatJson rationales = FloatJson::array();
  for (const Rationale& r : trace.rationales) {
    FloatJson mask = FloatJson::array();
    for (auto bit : r.mask) mask.push_back(static_cast<int>(bit));
    rationales.push_back({{"annotator_id", r.annotator_id}, {"mask", mask}});
  }
  record["rationales"] = std::move(rationales);
  return record;
}

std::vector<AttentionTrace> LoadTraces(const std::filesystem::path& path) {
  const std::string text = ReadFile(path);
  std::vector<AttentionTrace> traces;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(lines, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    FloatJson record;
    try {
      record = FloatJson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path, line_number, e.what());
    }
    AttentionTrace trace;
    try {
      trace = TraceFromJson(record);
    } catch (const DimensionError& e) {
      throw DimensionError(path.string() + ":" + std::to_string(line_number) +
                           ": " + e.what());
    } catch (const VersionError& e) {
      throw VersionError(path.string() + ":" + std::to_string(line_number) +
                         ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(path, line_number, e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, line_number, e.what());
    }
    ValidateTrace(trace);
    traces.push_back(std::move(trace));
  }
  return traces;
}

void WriteTraces(const std::vector<AttentionTrace>& traces,
                 const std::filesystem::path& path) {
  std::string out;
  for (const AttentionTrace& trace : traces) {
    ValidateTrace(trace);
    out += TraceToJson(trace).dump();
    out += '\n';
  }
  WriteFile(path, out);
}

std::vector<AttentionTrace> FilterCorrect(
    const std::vector<AttentionTrace>& traces) {
  std::vector<AttentionTrace> kept;
  std::copy_if(traces.begin(), traces.end(), std::back_inserter(kept),
               [](const AttentionTrace& t) {
                 return t.label_pred == t.label_gold;
               });
  return kept;
}

DatasetManifest ManifestFromJson(const Json& object,
                                 const std::filesystem::path& base_dir) {
  CheckFormatVersion(object);
  DatasetManifest manifest;
  manifest.dataset_id = Field<std::string>(object, "dataset_id");
  manifest.avg_rationale_k = Field<int>(object, "avg_rationale_k");
  if (manifest.avg_rationale_k < 1) {
    throw ValidationError("avg-rationale-k", manifest.dataset_id,
                          "avg_rationale_k must be >= 1");
  }
  if (auto it = object.find("positive_rate");
      it != object.end() && !it->is_null()) {
    const double rate = it->get<double>();
    if (!(rate >= 0.0 && rate <= 1.0)) {
      throw ValidationError("positive-rate", manifest.dataset_id,
                            "positive_rate must lie in [0, 1]");
    }
    manifest.positive_rate = rate;
  }
  for (const auto& [split, files] : object.at("splits").items()) {
    auto& list = manifest.trace_files[ParseSplit(split)];
    for (const auto& file : files) {
      std::filesystem::path p = file.get<std::string>();
      list.push_back(p.is_absolute() ? p : base_dir / p);
    }
  }
  return manifest;
}

DatasetManifest LoadManifest(const std::filesystem::path& path) {
  Json object;
  try {
    object = Json::parse(ReadFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, 0, e.what());
  }
  try {
    return ManifestFromJson(object, path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, e.what());
  }
}

Json ManifestToJson(const DatasetManifest& manifest) {
  Json object;
  object["format_version"] = kFormatVersion;
  object["dataset_id"] = manifest.dataset_id;
  object["avg_rationale_k"] = manifest.avg_rationale_k;
  if (manifest.positive_rate) object["positive_rate"] = *manifest.positive_rate;
  Json splits = Json::object();
  for (const auto& [split, files] : manifest.trace_files) {
    Json list = Json::array();
    for (const auto& f : files) list.push_back(f.string());
    splits[SplitName(split)] = std::move(list);
  }
  object["splits"] = std::move(splits);
  return object;
}

std::vector<AttentionTrace> LoadSplit(const DatasetManifest& manifest,
                                      Split split) {
  std::vector<AttentionTrace> out;
  auto it = manifest.trace_files.find(split);
  if (it == manifest.trace_files.end()) return out;
  for (const auto& file : it->second) {
    auto traces = LoadTraces(file);
    std::move(traces.begin(), traces.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace expnet
