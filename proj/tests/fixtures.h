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

#ifndef EXPNET_TESTS_FIXTURES_H_
#define EXPNET_TESTS_FIXTURES_H_

#include <atomic>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "expnet/trace.h"

namespace expnet::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("expnet_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// A valid trace: [CLS] at 0, tokens mapped to `word_ids`, [SEP] last.
// Task-to-token rows are uniform; token-to-task entries are 0.25 except the
// aggregation token's self-attention.
inline AttentionTrace MakeTrace(const std::string& id,
                                const std::vector<int>& word_ids,
                                int num_heads = 2) {
  AttentionTrace t;
  t.example_id = id;
  t.dataset_id = "fixture";
  t.tokens.push_back("[CLS]");
  t.word_ids.push_back(std::nullopt);
  for (int w : word_ids) {
    t.tokens.push_back("tok" + std::to_string(w));
    t.word_ids.push_back(w);
  }
  t.tokens.push_back("[SEP]");
  t.word_ids.push_back(std::nullopt);
  const auto tokens = static_cast<Eigen::Index>(t.tokens.size());
  t.attn_task_to_token =
      Eigen::MatrixXf::Constant(num_heads, tokens, 1.0f / tokens);
  t.attn_token_to_task = Eigen::MatrixXf::Constant(num_heads, tokens, 0.25f);
  t.attn_token_to_task.col(0) = t.attn_task_to_token.col(0);
  t.label_gold = 1;
  t.label_pred = 1;
  t.rationales.push_back({"a1", WordMask(t.num_words(), 0)});
  return t;
}

// A valid trace with random attention: softmax rows drawn from `rng`,
// 1..3 subtokens per word.
inline AttentionTrace RandomTrace(const std::string& id, int num_words,
                                  int num_heads, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pieces(1, 3);
  std::vector<int> ids;
  for (int w = 0; w < num_words; ++w) {
    const int n = pieces(rng);
    for (int p = 0; p < n; ++p) ids.push_back(w);
  }
  AttentionTrace t = MakeTrace(id, ids, num_heads);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::exponential_distribution<double> weight(1.0);
  for (int h = 0; h < num_heads; ++h) {
    std::vector<double> row(t.num_tokens());
    double sum = 0;
    for (auto& v : row) sum += (v = weight(rng));
    for (int j = 0; j < t.num_tokens(); ++j) {
      t.attn_task_to_token(h, j) = static_cast<float>(row[j] / sum);
      t.attn_token_to_task(h, j) = unit(rng);
    }
    t.attn_token_to_task(h, t.cls_index) = t.attn_task_to_token(h, t.cls_index);
  }
  std::bernoulli_distribution coin(0.3);
  for (auto& bit : t.rationales.front().mask) bit = coin(rng);
  return t;
}

}  // namespace expnet::testing

#endif  // EXPNET_TESTS_FIXTURES_H_
