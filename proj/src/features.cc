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

#include "expnet/features.h"

#include <algorithm>

namespace expnet {

std::string FeatureMaskName(FeatureMask mask) {
  switch (mask) {
    case FeatureMask::kFull:
      return "full";
    case FeatureMask::kTaskToTokenOnly:
      return "task_to_token_only";
    case FeatureMask::kTokenToTaskOnly:
      return "token_to_task_only";
  }
  return "unknown";
}

FeatureMask ParseFeatureMask(const std::string& name) {
  if (name == "full") return FeatureMask::kFull;
  if (name == "task_to_token_only") return FeatureMask::kTaskToTokenOnly;
  if (name == "token_to_task_only") return FeatureMask::kTokenToTaskOnly;
  throw Error("unknown feature mask \"" + name + "\"");
}

int FeatureDim(FeatureMask mask, int num_heads) {
  return mask == FeatureMask::kFull ? 2 * num_heads : num_heads;
}

std::vector<int> CandidateTokens(const AttentionTrace& trace) {
  std::vector<int> out;
  for (int j = 0; j < trace.num_tokens(); ++j) {
    if (trace.word_ids[j]) out.push_back(j);
  }
  return out;
}

Eigen::MatrixXf FeatureMatrix(const AttentionTrace& trace, FeatureMask mask) {
  const int heads = trace.num_heads();
  const std::vector<int> candidates = CandidateTokens(trace);
  Eigen::MatrixXf features(FeatureDim(mask, heads),
                           static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    const int j = candidates[c];
    switch (mask) {
      case FeatureMask::kFull:
        features.col(col).head(heads) = trace.attn_task_to_token.col(j);
        features.col(col).tail(heads) = trace.attn_token_to_task.col(j);
        break;
      case FeatureMask::kTaskToTokenOnly:
        features.col(col) = trace.attn_task_to_token.col(j);
        break;
      case FeatureMask::kTokenToTaskOnly:
        features.col(col) = trace.attn_token_to_task.col(j);
        break;
    }
  }
  return features;
}

std::vector<TokenFeatureVector> ExtractFeatures(const AttentionTrace& trace,
                                                FeatureMask mask) {
  const Eigen::MatrixXf features = FeatureMatrix(trace, mask);
  const std::vector<int> candidates = CandidateTokens(trace);
  std::vector<TokenFeatureVector> out;
  out.reserve(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    out.push_back({trace.example_id, candidates[c],
                   features.col(static_cast<Eigen::Index>(c))});
  }
  return out;
}

std::vector<LabeledToken> ProjectLabels(const AttentionTrace& trace,
                                        const WordMask& merged_rationale,
                                        FeatureMask mask) {
  const auto num_words = static_cast<std::size_t>(trace.num_words());
  if (merged_rationale.size() != num_words) {
    throw DimensionError("example \"" + trace.example_id + "\": rationale has " +
                         std::to_string(merged_rationale.size()) +
                         " entries for " + std::to_string(num_words) +
                         " words");
  }
  std::vector<LabeledToken> out;
  for (TokenFeatureVector& f : ExtractFeatures(trace, mask)) {
    const int word = *trace.word_ids[f.token_index];
    const std::uint8_t target = merged_rationale[word] ? 1 : 0;
    out.push_back({std::move(f), target});
  }
  return out;
}

double ComputePositiveRate(std::span<const LabeledToken> labeled) {
  if (labeled.empty()) throw Error("positive rate of an empty token set");
  const auto positives = std::count_if(
      labeled.begin(), labeled.end(),
      [](const LabeledToken& t) { return t.target == 1; });
  return static_cast<double>(positives) / static_cast<double>(labeled.size());
}

}  // namespace expnet
