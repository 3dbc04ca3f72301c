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

// Experiment orchestration: annotator merging, cross-task runs and their
// on-disk outputs.
//
// A run directory holds
//
//   manifest.json            seeds, policies and inputs of the run
//   model.json               the trained explainer
//   reports/<method>.json    one EvalReport per method
//   explanations/<method>.jsonl
//   results.json, results.md, html/   rendered by RenderReport

#ifndef EXPNET_HARNESS_H_
#define EXPNET_HARNESS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "expnet/baseline.h"
#include "expnet/features.h"
#include "expnet/metrics.h"
#include "expnet/network.h"
#include "expnet/trace.h"

namespace expnet {

struct MergePolicy {
  enum class Kind { kMajority, kUnion, kSingleAnnotator };
  Kind kind = Kind::kMajority;
  std::string annotator_id;  // for kSingleAnnotator

  std::string Name() const;
  Json ToJson() const;
  static MergePolicy FromJson(const Json& value);
};

struct MergedRationale {
  std::string example_id;
  WordMask word_mask;
  MergePolicy policy;
};

// Majority marks a word when strictly more than half of the annotators do,
// so an even split is negative. Union marks a word any annotator marks.
MergedRationale MergeRationales(const AttentionTrace& trace,
                                const MergePolicy& policy);

struct MethodSpec {
  std::string method_id;
  // Score file per test dataset id. Empty for the built-in "expnet" and
  // "random" methods.
  std::map<std::string, std::filesystem::path> score_files;

  bool builtin() const { return score_files.empty(); }
};

struct ExperimentSpec {
  std::map<std::string, std::filesystem::path> manifests;
  std::vector<std::string> train_dataset_ids;
  std::string test_dataset_id;
  TrainingConfig config;
  FeatureMask mask = FeatureMask::kFull;
  std::vector<MethodSpec> methods;
  MergePolicy merge_policy;
  std::uint64_t seed = 0;
  int bootstrap_iterations = 1000;
  double bootstrap_level = 0.95;
  std::filesystem::path output_dir;

  // Throws ValidationError("cross-task", ...) when the test dataset is also
  // a training dataset, and Error for unresolved references.
  void Validate() const;

  std::uint64_t train_seed() const { return seed; }
  std::uint64_t random_seed() const { return seed + 1; }
  std::uint64_t bootstrap_seed() const { return seed + 2; }
};

// Reads an experiment config. With "protocol": "leave_one_task_out" one spec
// is produced per dataset, trained on all the others and written to
// <output_dir>/<test_dataset_id>. Relative paths resolve against the
// config's directory.
std::vector<ExperimentSpec> LoadExperimentSpecs(
    const std::filesystem::path& path,
    std::optional<std::uint64_t> seed_override = std::nullopt);

// One spec per dataset in `dataset_ids`, each trained on all the others.
std::vector<ExperimentSpec> LeaveOneTaskOut(
    const ExperimentSpec& base, const std::vector<std::string>& dataset_ids);

struct TrainingRun {
  ExpNetModel model;
  double positive_rate = 0;
  std::int64_t train_examples = 0;
  std::int64_t train_examples_correct = 0;
};

// Loads the training datasets, keeps correct predictions, merges
// rationales, projects labels and trains. Nothing from the test dataset is
// read.
TrainingRun TrainOnSources(const ExperimentSpec& spec);

struct ExperimentResult {
  std::vector<EvalReport> reports;
  TrainingRun training;
  std::vector<AttentionTrace> test_traces;  // correct predictions only
  std::vector<WordMask> gold;
  std::map<std::string, std::vector<Explanation>> explanations;
};

// Full pipeline; writes the run directory described above.
ExperimentResult RunExperiment(const ExperimentSpec& spec);

}  // namespace expnet

#endif  // EXPNET_HARNESS_H_
