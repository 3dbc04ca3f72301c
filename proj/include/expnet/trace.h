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

// Attention-trace interchange format.
//
// A trace file is UTF-8 text with one JSON object per line. Each object
// holds one classified example: its subword tokens, the token-to-word map,
// and the final-layer attention between the aggregation token and every
// other token, per head:
//
//   {"format_version": 1, "example_id": "...", "dataset_id": "...",
//    "tokens": [...], "cls_index": 0, "word_ids": [null, 0, 0, 1, null],
//    "num_heads": H,
//    "attn_task_to_token": [[...T...] x H], "attn_token_to_task": [...],
//    "label_gold": 1, "label_pred": 1,
//    "rationales": [{"annotator_id": "a1", "mask": [0, 1]}]}
//
// Attention values are float32 and are written as the shortest decimal
// that reads back to the same float.

#ifndef EXPNET_TRACE_H_
#define EXPNET_TRACE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "expnet/common.h"

namespace expnet {

// Binary vector over word positions, 1 = important.
using WordMask = std::vector<std::uint8_t>;

// Absolute per-row tolerance on the task-to-token softmax rows.
inline constexpr double kRowSumTolerance = 1e-3;
// Allowed difference between the two copies of the aggregation token's
// self-attention.
inline constexpr float kSelfAttentionTolerance = 1e-6f;

struct Rationale {
  std::string annotator_id;
  WordMask mask;

  bool operator==(const Rationale&) const = default;
};

struct AttentionTrace {
  std::string example_id;
  std::string dataset_id;
  std::vector<std::string> tokens;
  int cls_index = 0;
  std::vector<std::optional<int>> word_ids;
  // H x T. Row h is the aggregation token's attention distribution in head h.
  Eigen::MatrixXf attn_task_to_token;
  // H x T. Entry (h, j) is token j's attention to the aggregation token.
  Eigen::MatrixXf attn_token_to_task;
  int label_gold = 0;
  int label_pred = 0;
  std::vector<Rationale> rationales;

  int num_heads() const {
    return static_cast<int>(attn_task_to_token.rows());
  }
  int num_tokens() const { return static_cast<int>(tokens.size()); }
  // 1 + the largest word id; 0 when no token maps to a word.
  int num_words() const;

  bool operator==(const AttentionTrace& other) const;
};

enum class Split { kTrain, kValidation, kTest };

std::string SplitName(Split split);
Split ParseSplit(const std::string& name);

struct DatasetManifest {
  std::string dataset_id;
  int avg_rationale_k = 1;
  // Informational. The harness recomputes the training-pool rate itself.
  std::optional<double> positive_rate;
  // Trace files per split, resolved against the manifest's directory.
  std::map<Split, std::vector<std::filesystem::path>> trace_files;
};

// Throws ValidationError naming the first violated invariant.
void ValidateTrace(const AttentionTrace& trace);

AttentionTrace TraceFromJson(const FloatJson& record);
FloatJson TraceToJson(const AttentionTrace& trace);

// Reads and validates every line of a trace file, preserving order. Blank
// lines are skipped.
std::vector<AttentionTrace> LoadTraces(const std::filesystem::path& path);

// Validates, then writes one line per trace.
void WriteTraces(const std::vector<AttentionTrace>& traces,
                 const std::filesystem::path& path);

// Examples whose predicted label matches the gold label, order preserved.
std::vector<AttentionTrace> FilterCorrect(
    const std::vector<AttentionTrace>& traces);

DatasetManifest LoadManifest(const std::filesystem::path& path);
DatasetManifest ManifestFromJson(const Json& object,
                                 const std::filesystem::path& base_dir);
Json ManifestToJson(const DatasetManifest& manifest);

// Loads every trace file listed for `split`.
std::vector<AttentionTrace> LoadSplit(const DatasetManifest& manifest,
                                      Split split);

}  // namespace expnet

#endif  // EXPNET_TRACE_H_
