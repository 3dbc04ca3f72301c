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

#include "expnet/harness.h"

#include <algorithm>
#include <set>

#include "expnet/report.h"

namespace expnet {
namespace {

// Runs one pipeline stage, prefixing any error with the stage name.
template <typename F>
auto Stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ValidationError& e) {
    throw ValidationError(e.invariant(), e.example_id(),
                          "stage " + name + ": " + e.what());
  } catch (const VersionError& e) {
    throw VersionError("stage " + name + ": " + e.what());
  } catch (const Error& e) {
    throw Error("stage " + name + ": " + e.what());
  }
}

DatasetManifest ManifestFor(const ExperimentSpec& spec,
                            const std::string& dataset_id) {
  auto it = spec.manifests.find(dataset_id);
  if (it == spec.manifests.end()) {
    throw Error("no manifest for dataset \"" + dataset_id + "\"");
  }
  DatasetManifest manifest = LoadManifest(it->second);
  if (manifest.dataset_id != dataset_id) {
    throw Error("manifest " + it->second.string() + " describes \"" +
                manifest.dataset_id + "\", expected \"" + dataset_id + "\"");
  }
  return manifest;
}

std::filesystem::path Resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path = p;
  return path.is_absolute() ? path : base / path;
}

// Paths in a run manifest are relative to the run directory so that a run
// moved or repeated elsewhere produces the same bytes.
std::string RunRelative(const ExperimentSpec& spec,
                        const std::filesystem::path& path) {
  const auto base = std::filesystem::absolute(spec.output_dir).lexically_normal();
  return std::filesystem::absolute(path)
      .lexically_normal()
      .lexically_relative(base)
      .generic_string();
}

Json RunManifest(const ExperimentSpec& spec, const TrainingRun& training,
                 const DatasetManifest& test_manifest,
                 std::int64_t test_total, std::int64_t test_correct) {
  Json m;
  m["format_version"] = kFormatVersion;
  m["toolkit_version"] = std::string(kToolkitVersion);
  m["train_dataset_ids"] = spec.train_dataset_ids;
  m["test_dataset_id"] = spec.test_dataset_id;
  Json manifests = Json::object();
  for (const auto& [id, path] : spec.manifests) manifests[id] = RunRelative(spec, path);
  m["dataset_manifests"] = std::move(manifests);
  Json test_files = Json::array();
  if (auto it = test_manifest.trace_files.find(Split::kTest);
      it != test_manifest.trace_files.end()) {
    for (const auto& f : it->second) test_files.push_back(RunRelative(spec, f));
  }
  m["test_trace_files"] = std::move(test_files);
  m["training_config"] = TrainingConfigToJson(spec.config);
  m["feature_mask"] = FeatureMaskName(spec.mask);
  Json methods = Json::array();
  for (const MethodSpec& method : spec.methods) {
    Json entry = {{"method_id", method.method_id}};
    if (!method.builtin()) {
      entry["score_file"] =
          RunRelative(spec, method.score_files.at(spec.test_dataset_id));
    }
    methods.push_back(std::move(entry));
  }
  m["methods"] = std::move(methods);
  m["merge_policy"] = spec.merge_policy.ToJson();
  m["seeds"] = {{"base", spec.seed},
                {"train", spec.train_seed()},
                {"random_baseline", spec.random_seed()},
                {"bootstrap", spec.bootstrap_seed()}};
  m["top_k"] = test_manifest.avg_rationale_k;
  m["threshold"] = spec.config.threshold;
  m["random_baseline_positive_rate"] = training.positive_rate;
  m["model_source_dataset_ids"] = training.model.meta.source_dataset_ids;
  m["counts"] = {{"train_examples", training.train_examples},
                 {"train_examples_correct", training.train_examples_correct},
                 {"train_tokens", training.model.meta.num_training_tokens},
                 {"test_examples", test_total},
                 {"test_examples_correct", test_correct}};
  m["decisions"] = {
      {"filter", "correct_predictions_only"},
      {"init", training.model.meta.init},
      {"loss_reduction", training.model.meta.loss_reduction},
      {"batching", training.model.meta.batching},
      {"fallback_tie_break", "earliest_token"},
      {"topk_tie_break", "earliest_position"},
      {"word_aggregation", "max"},
      {"auroc", "rank_statistic_ties_half"},
      {"aupr", "step_average_precision"},
      {"ci", "percentile_bootstrap_over_examples"},
      {"ci_iterations", spec.bootstrap_iterations},
      {"ci_level", spec.bootstrap_level}};
  return m;
}

}  // namespace

std::string MergePolicy::Name() const {
  switch (kind) {
    case Kind::kMajority:
      return "majority";
    case Kind::kUnion:
      return "union";
    case Kind::kSingleAnnotator:
      return "single_annotator";
  }
  return "unknown";
}

Json MergePolicy::ToJson() const {
  if (kind == Kind::kSingleAnnotator) {
    return {{"single_annotator", annotator_id}};
  }
  return Name();
}

MergePolicy MergePolicy::FromJson(const Json& value) {
  MergePolicy policy;
  if (value.is_string()) {
    const auto name = value.get<std::string>();
    if (name == "majority") {
      policy.kind = Kind::kMajority;
    } else if (name == "union") {
      policy.kind = Kind::kUnion;
    } else {
      throw Error("unknown merge policy \"" + name + "\"");
    }
  } else if (value.is_object() && value.contains("single_annotator")) {
    policy.kind = Kind::kSingleAnnotator;
    policy.annotator_id = value.at("single_annotator").get<std::string>();
  } else {
    throw Error("merge_policy must be \"majority\", \"union\" or "
                "{\"single_annotator\": id}");
  }
  return policy;
}

MergedRationale MergeRationales(const AttentionTrace& trace,
                                const MergePolicy& policy) {
  if (trace.rationales.empty()) {
    throw ValidationError("rationale-present", trace.example_id,
                          "example has no annotator rationale");
  }
  MergedRationale merged{trace.example_id, {}, policy};
  const auto num_words = static_cast<std::size_t>(trace.num_words());
  switch (policy.kind) {
    case MergePolicy::Kind::kSingleAnnotator: {
      auto it = std::find_if(
          trace.rationales.begin(), trace.rationales.end(),
          [&](const Rationale& r) { return r.annotator_id == policy.annotator_id; });
      if (it == trace.rationales.end()) {
        throw ValidationError("annotator-id", trace.example_id,
                              "unknown annotator \"" + policy.annotator_id +
                                  "\"");
      }
      merged.word_mask = it->mask;
      break;
    }
    case MergePolicy::Kind::kUnion:
    case MergePolicy::Kind::kMajority: {
      std::vector<std::size_t> votes(num_words, 0);
      for (const Rationale& r : trace.rationales) {
        for (std::size_t w = 0; w < num_words; ++w) votes[w] += r.mask.at(w);
      }
      const std::size_t annotators = trace.rationales.size();
      merged.word_mask.resize(num_words);
      for (std::size_t w = 0; w < num_words; ++w) {
        merged.word_mask[w] = policy.kind == MergePolicy::Kind::kUnion
                                  ? votes[w] > 0
                                  : 2 * votes[w] > annotators;
      }
      break;
    }
  }
  return merged;
}

void ExperimentSpec::Validate() const {
  if (train_dataset_ids.empty()) {
    throw Error("experiment needs at least one training dataset");
  }
  if (std::find(train_dataset_ids.begin(), train_dataset_ids.end(),
                test_dataset_id) != train_dataset_ids.end()) {
    throw ValidationError(
        "cross-task", test_dataset_id,
        "test dataset \"" + test_dataset_id + "\" is also a training dataset");
  }
  std::set<std::string> seen;
  for (const auto& id : train_dataset_ids) {
    if (!seen.insert(id).second) {
      throw Error("training dataset \"" + id + "\" listed twice");
    }
  }
  for (const auto& id : train_dataset_ids) {
    if (!manifests.contains(id)) {
      throw Error("no manifest for training dataset \"" + id + "\"");
    }
  }
  if (!manifests.contains(test_dataset_id)) {
    throw Error("no manifest for test dataset \"" + test_dataset_id + "\"");
  }
  std::set<std::string> method_ids;
  for (const MethodSpec& m : methods) {
    if (!method_ids.insert(m.method_id).second) {
      throw Error("method \"" + m.method_id + "\" listed twice");
    }
    if (m.builtin() && m.method_id != "expnet" && m.method_id != "random") {
      throw Error("method \"" + m.method_id + "\" has no score files");
    }
    if (!m.builtin() && !m.score_files.contains(test_dataset_id)) {
      throw Error("method \"" + m.method_id + "\" has no score file for \"" +
                  test_dataset_id + "\"");
    }
  }
  if (methods.empty()) throw Error("experiment lists no methods");
  if (bootstrap_iterations < 1) throw Error("bootstrap iterations must be >= 1");
  if (!(bootstrap_level > 0 && bootstrap_level < 1)) {
    throw Error("bootstrap level must lie in (0, 1)");
  }
  config.Validate();
}

std::vector<ExperimentSpec> LeaveOneTaskOut(
    const ExperimentSpec& base, const std::vector<std::string>& dataset_ids) {
  if (dataset_ids.size() < 2) {
    throw Error("leave-one-task-out needs at least two datasets");
  }
  std::vector<ExperimentSpec> specs;
  for (const auto& held_out : dataset_ids) {
    ExperimentSpec spec = base;
    spec.test_dataset_id = held_out;
    spec.train_dataset_ids.clear();
    for (const auto& id : dataset_ids) {
      if (id != held_out) spec.train_dataset_ids.push_back(id);
    }
    spec.output_dir = base.output_dir / held_out;
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::vector<ExperimentSpec> LoadExperimentSpecs(
    const std::filesystem::path& path,
    std::optional<std::uint64_t> seed_override) {
  Json j;
  try {
    j = Json::parse(ReadFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, 0, e.what());
  }
  const std::filesystem::path base = path.parent_path();
  ExperimentSpec spec;
  std::vector<std::string> dataset_order;
  try {
    CheckFormatVersion(j);
    for (const auto& [id, file] : j.at("datasets").items()) {
      spec.manifests[id] = Resolve(base, file.get<std::string>());
      dataset_order.push_back(id);
    }
    if (auto it = j.find("config"); it != j.end()) {
      spec.config = TrainingConfigFromJson(*it);
    }
    spec.mask = ParseFeatureMask(j.value("mask", std::string("full")));
    for (const auto& m : j.at("methods")) {
      MethodSpec method;
      if (m.is_string()) {
        method.method_id = m.get<std::string>();
      } else {
        method.method_id = Field<std::string>(m, "method_id");
        for (const auto& [id, file] : m.at("scores").items()) {
          method.score_files[id] = Resolve(base, file.get<std::string>());
        }
      }
      spec.methods.push_back(std::move(method));
    }
    if (auto it = j.find("merge_policy"); it != j.end()) {
      spec.merge_policy = MergePolicy::FromJson(*it);
    }
    spec.seed = j.value("seed", std::uint64_t{0});
    if (auto it = j.find("bootstrap"); it != j.end()) {
      spec.bootstrap_iterations = it->value("iterations", 1000);
      spec.bootstrap_level = it->value("level", 0.95);
    }
    spec.output_dir = Resolve(base, Field<std::string>(j, "output_dir"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, e.what());
  } catch (const ValidationError&) {
    throw;
  } catch (const VersionError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(path, 0, e.what());
  }
  if (seed_override) spec.seed = *seed_override;

  std::vector<ExperimentSpec> specs;
  const std::string protocol = j.value("protocol", std::string("single"));
  if (protocol == "leave_one_task_out") {
    specs = LeaveOneTaskOut(spec, dataset_order);
  } else if (protocol == "single") {
    spec.train_dataset_ids =
        j.at("train_dataset_ids").get<std::vector<std::string>>();
    spec.test_dataset_id = j.at("test_dataset_id").get<std::string>();
    specs.push_back(std::move(spec));
  } else {
    throw ParseError(path, 0, "unknown protocol \"" + protocol + "\"");
  }
  for (const auto& s : specs) s.Validate();
  return specs;
}

TrainingRun TrainOnSources(const ExperimentSpec& spec) {
  spec.Validate();
  TrainingRun run;
  std::vector<LabeledToken> labeled;
  for (const std::string& id : spec.train_dataset_ids) {
    const auto traces = Stage("load-train:" + id, [&] {
      return LoadSplit(ManifestFor(spec, id), Split::kTrain);
    });
    const auto correct = FilterCorrect(traces);
    run.train_examples += static_cast<std::int64_t>(traces.size());
    run.train_examples_correct += static_cast<std::int64_t>(correct.size());
    Stage("label-train:" + id, [&] {
      for (const AttentionTrace& trace : correct) {
        const auto merged = MergeRationales(trace, spec.merge_policy);
        auto tokens = ProjectLabels(trace, merged.word_mask, spec.mask);
        std::move(tokens.begin(), tokens.end(), std::back_inserter(labeled));
      }
      return 0;
    });
  }
  TrainOptions options;
  options.mask = spec.mask;
  options.source_dataset_ids = spec.train_dataset_ids;
  run.model = Stage("train", [&] {
    return Train(labeled, spec.config, spec.train_seed(), options);
  });
  run.positive_rate = ComputePositiveRate(labeled);
  return run;
}

ExperimentResult RunExperiment(const ExperimentSpec& spec) {
  spec.Validate();
  ExperimentResult result;
  result.training = TrainOnSources(spec);
  const ExpNetModel& model = result.training.model;
  const auto& sources = model.meta.source_dataset_ids;
  if (std::find(sources.begin(), sources.end(), spec.test_dataset_id) !=
      sources.end()) {
    throw ValidationError("cross-task", spec.test_dataset_id,
                          "model was trained on the test dataset");
  }

  const DatasetManifest test_manifest =
      Stage("load-test", [&] { return ManifestFor(spec, spec.test_dataset_id); });
  const std::vector<AttentionTrace> all_test =
      Stage("load-test", [&] { return LoadSplit(test_manifest, Split::kTest); });
  result.test_traces = FilterCorrect(all_test);
  if (result.test_traces.empty()) {
    throw Error("stage load-test: no correctly classified test examples");
  }
  Stage("merge-test", [&] {
    for (const AttentionTrace& t : result.test_traces) {
      result.gold.push_back(MergeRationales(t, spec.merge_policy).word_mask);
    }
    return 0;
  });
  const auto all_index = IndexTraces(all_test);

  BootstrapOptions bootstrap{spec.bootstrap_iterations, spec.bootstrap_level,
                             spec.bootstrap_seed()};
  for (const MethodSpec& method : spec.methods) {
    const std::string stage = "explain:" + method.method_id;
    std::vector<Explanation> explanations = Stage(stage, [&] {
      std::vector<Explanation> out;
      if (method.method_id == "expnet" && method.builtin()) {
        for (const auto& t : result.test_traces) {
          out.push_back(Predict(model, t, spec.config.threshold));
        }
      } else if (method.method_id == "random" && method.builtin()) {
        for (const auto& t : result.test_traces) {
          out.push_back(RandomBaseline(t, result.training.positive_rate,
                                       spec.random_seed()));
        }
      } else {
        const auto records = LoadScores(
            method.score_files.at(spec.test_dataset_id), all_index);
        std::map<std::string, const ScoreRecord*> by_id;
        for (const ScoreRecord& r : records) by_id[r.example_id] = &r;
        for (const auto& t : result.test_traces) {
          auto it = by_id.find(t.example_id);
          if (it == by_id.end()) {
            throw ValidationError("score-missing", t.example_id,
                                  "no scores from method \"" +
                                      method.method_id + "\"");
          }
          Explanation e =
              ExplainFromScores(t, *it->second, test_manifest.avg_rationale_k);
          e.method_id = method.method_id;
          out.push_back(std::move(e));
        }
      }
      return out;
    });
    std::vector<EvaluatedExample> evaluated;
    for (std::size_t i = 0; i < explanations.size(); ++i) {
      evaluated.push_back({explanations[i], result.gold[i]});
    }
    result.reports.push_back(Stage("evaluate:" + method.method_id, [&] {
      return Evaluate(method.method_id, spec.test_dataset_id, evaluated,
                      bootstrap);
    }));
    result.explanations[method.method_id] = std::move(explanations);
  }

  Stage("write", [&] {
    const auto& out = spec.output_dir;
    WriteFile(out / "manifest.json",
              RunManifest(spec, result.training, test_manifest,
                          static_cast<std::int64_t>(all_test.size()),
                          static_cast<std::int64_t>(result.test_traces.size()))
                      .dump(2) +
                  "\n");
    SaveModel(model, out / "model.json");
    for (const EvalReport& report : result.reports) {
      WriteFile(out / "reports" / (report.method_id + ".json"),
                EvalReportToJson(report).dump(2) + "\n");
      WriteExplanations(result.explanations.at(report.method_id),
                        out / "explanations" / (report.method_id + ".jsonl"));
    }
    ReportDataset dataset{spec.test_dataset_id, result.test_traces,
                          result.gold, result.explanations};
    RenderReport(result.reports, {dataset}, out);
    return 0;
  });
  return result;
}

}  // namespace expnet
