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

#ifndef EXPNET_FEATURES_H_
#define EXPNET_FEATURES_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "expnet/trace.h"

namespace expnet {

// Which attention directions feed the explainer. The *_only modes drop the
// other half of the features rather than zeroing it.
enum class FeatureMask { kFull, kTaskToTokenOnly, kTokenToTaskOnly };

std::string FeatureMaskName(FeatureMask mask);
FeatureMask ParseFeatureMask(const std::string& name);

// Feature dimension for a trace with `num_heads` heads.
int FeatureDim(FeatureMask mask, int num_heads);

// Attention features of one token: the aggregation token's attention to it
// in heads 1..H, then its attention to the aggregation token in heads 1..H.
struct TokenFeatureVector {
  std::string example_id;
  int token_index = 0;
  Eigen::VectorXf values;
};

struct LabeledToken {
  TokenFeatureVector feature;
  std::uint8_t target = 0;
};

// Indices of the tokens that are candidates for importance: those with a
// word id. The aggregation token and separators are never candidates.
std::vector<int> CandidateTokens(const AttentionTrace& trace);

// One vector per candidate token, in sequence order.
std::vector<TokenFeatureVector> ExtractFeatures(const AttentionTrace& trace,
                                                FeatureMask mask);

// Same features as ExtractFeatures, stacked column-wise (dim x candidates).
Eigen::MatrixXf FeatureMatrix(const AttentionTrace& trace, FeatureMask mask);

// Copies each word's rationale bit onto all of its subword tokens.
std::vector<LabeledToken> ProjectLabels(const AttentionTrace& trace,
                                        const WordMask& merged_rationale,
                                        FeatureMask mask = FeatureMask::kFull);

// Fraction of tokens with target 1. Throws on empty input.
double ComputePositiveRate(std::span<const LabeledToken> labeled);

}  // namespace expnet

#endif  // EXPNET_FEATURES_H_
