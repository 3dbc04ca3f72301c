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

#include "expnet/synthetic.h"

#include <algorithm>
#include <cmath>
#include <random>

namespace expnet {
namespace {

constexpr float kImportantLow = 0.55f;
constexpr float kImportantHigh = 0.95f;
constexpr float kPlainLow = 0.02f;
constexpr float kPlainHigh = 0.40f;

AttentionTrace GenerateOne(const SyntheticSpec& spec, int index,
                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> word_count(spec.min_words, spec.max_words);
  std::uniform_int_distribution<int> pieces(1, 3);
  std::uniform_int_distribution<int> vocab(0, 499);
  std::normal_distribution<double> logit(0.0, 1.0);

  AttentionTrace t;
  t.example_id =
      spec.dataset_id + "-" + spec.split_tag + "-" + std::to_string(index);
  t.dataset_id = spec.dataset_id;
  t.label_gold = static_cast<int>(unit(rng) < 0.5);
  const bool correct = unit(rng) >= spec.mispredict_rate;
  t.label_pred = correct ? t.label_gold : 1 - t.label_gold;

  const int num_words = word_count(rng);
  WordMask truth(num_words, 0);
  for (auto& bit : truth) bit = unit(rng) < spec.importance_rate;
  if (std::find(truth.begin(), truth.end(), 1) == truth.end()) {
    truth[std::uniform_int_distribution<int>(0, num_words - 1)(rng)] = 1;
  }

  t.tokens.push_back("[CLS]");
  t.word_ids.push_back(std::nullopt);
  for (int w = 0; w < num_words; ++w) {
    const std::string stem = spec.vocab_prefix + std::to_string(vocab(rng));
    const int n = pieces(rng);
    for (int p = 0; p < n; ++p) {
      t.tokens.push_back(p == 0 ? stem : "##" + std::to_string(p));
      t.word_ids.push_back(w);
    }
  }
  t.tokens.push_back("[SEP]");
  t.word_ids.push_back(std::nullopt);
  t.cls_index = 0;

  const int heads = spec.num_heads;
  const int tokens = t.num_tokens();
  t.attn_task_to_token.resize(heads, tokens);
  t.attn_token_to_task.resize(heads, tokens);
  for (int h = 0; h < heads; ++h) {
    std::vector<double> row(tokens);
    double sum = 0;
    for (auto& v : row) sum += (v = std::exp(logit(rng)));
    for (int j = 0; j < tokens; ++j) {
      t.attn_task_to_token(h, j) = static_cast<float>(row[j] / sum);
    }
  }
  for (int j = 0; j < tokens; ++j) {
    for (int h = 0; h < heads; ++h) {
      float value;
      if (j == t.cls_index) {
        value = t.attn_task_to_token(h, j);
      } else if (!t.word_ids[j]) {
        value = static_cast<float>(unit(rng));
      } else {
        const bool important = truth[*t.word_ids[j]] != 0;
        float low = important ? kImportantLow : kPlainLow;
        float high = important ? kImportantHigh : kPlainHigh;
        if (!correct) {
          low = kPlainLow;
          high = kImportantHigh;
        }
        value = low + static_cast<float>(unit(rng)) * (high - low);
      }
      t.attn_token_to_task(h, j) = value;
    }
  }

  for (int a = 0; a < spec.annotators; ++a) {
    Rationale r{"a" + std::to_string(a + 1), truth};
    if (a >= 2) {
      for (auto& bit : r.mask) {
        if (unit(rng) < spec.annotator_noise) bit = 1 - bit;
      }
    }
    t.rationales.push_back(std::move(r));
  }
  return t;
}

}  // namespace

bool PlantedRule(const AttentionTrace& trace, int token) {
  return trace.attn_token_to_task.col(token).mean() > 0.5f;
}

std::vector<AttentionTrace> GenerateSynthetic(const SyntheticSpec& spec) {
  if (spec.min_words < 1 || spec.max_words < spec.min_words ||
      spec.num_heads < 1 || spec.n_examples < 0) {
    throw Error("invalid synthetic spec");
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<AttentionTrace> out;
  out.reserve(spec.n_examples);
  for (int i = 0; i < spec.n_examples; ++i) {
    out.push_back(GenerateOne(spec, i, rng));
  }
  return out;
}

std::vector<std::filesystem::path> WriteSyntheticSuite(
    const std::filesystem::path& dir, const std::vector<SyntheticSpec>& specs,
    int test_examples) {
  std::vector<std::filesystem::path> manifests;
  for (const SyntheticSpec& spec : specs) {
    const auto base = dir / spec.dataset_id;
    const auto train = GenerateSynthetic(spec);
    SyntheticSpec test_spec = spec;
    test_spec.seed = spec.seed + 1;
    test_spec.n_examples = test_examples;
    test_spec.split_tag = "test";
    const auto test = GenerateSynthetic(test_spec);
    WriteTraces(train, base / "train.jsonl");
    WriteTraces(test, base / "test.jsonl");

    double important = 0;
    for (const auto& t : train) {
      for (auto bit : t.rationales.front().mask) important += bit;
    }
    DatasetManifest manifest;
    manifest.dataset_id = spec.dataset_id;
    const double per_example =
        important / std::max<double>(1.0, static_cast<double>(train.size()));
    manifest.avg_rationale_k =
        std::max(1, static_cast<int>(std::lround(per_example)));
    manifest.trace_files[Split::kTrain] = {"train.jsonl"};
    manifest.trace_files[Split::kTest] = {"test.jsonl"};
    WriteFile(base / "manifest.json", ManifestToJson(manifest).dump(2) + "\n");
    manifests.push_back(base / "manifest.json");
  }
  return manifests;
}

}  // namespace expnet
