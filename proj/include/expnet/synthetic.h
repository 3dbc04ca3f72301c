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

// Synthetic attention traces with a planted importance rule, for tests and
// demos that need no encoder model.
//
// On correctly classified examples a word is important exactly when the mean
// over heads of its tokens' attention to the aggregation token exceeds 0.5:
// important tokens draw every head from [0.55, 0.95], the rest from
// [0.02, 0.40]. Misclassified examples draw from [0.02, 0.95] regardless of
// importance, so the rule only holds after correct-prediction filtering.

#ifndef EXPNET_SYNTHETIC_H_
#define EXPNET_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "expnet/trace.h"

namespace expnet {

struct SyntheticSpec {
  std::string dataset_id = "synthetic";
  // Prefix of every word string; distinct prefixes give disjoint
  // vocabularies.
  std::string vocab_prefix = "w";
  // Example ids are "<dataset_id>-<split_tag>-<index>".
  std::string split_tag = "train";
  int n_examples = 200;
  int num_heads = 12;
  int min_words = 4;
  int max_words = 16;
  double importance_rate = 0.3;
  double mispredict_rate = 0.1;
  // The first two annotators copy the planted rationale; any further
  // annotator flips each word with probability annotator_noise.
  int annotators = 3;
  double annotator_noise = 0.1;
  std::uint64_t seed = 0;
};

// True when the planted rule marks token j of a trace important.
bool PlantedRule(const AttentionTrace& trace, int token);

std::vector<AttentionTrace> GenerateSynthetic(const SyntheticSpec& spec);

// Writes <dir>/<dataset_id>/{train,test}.jsonl and manifest.json for each
// spec (test examples use seed + 1). K is the mean number of important
// words per training example, rounded and at least 1. Returns the manifest
// paths.
std::vector<std::filesystem::path> WriteSyntheticSuite(
    const std::filesystem::path& dir, const std::vector<SyntheticSpec>& specs,
    int test_examples);

}  // namespace expnet

#endif  // EXPNET_SYNTHETIC_H_
