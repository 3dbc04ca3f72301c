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

#include "expnet/cli.h"

#include <cstdio>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "expnet/baseline.h"
#include "expnet/harness.h"
#include "expnet/metrics.h"
#include "expnet/network.h"
#include "expnet/report.h"
#include "expnet/synthetic.h"
#include "expnet/trace.h"

namespace expnet {
namespace {

void EmitLines(const std::string& text, const std::string& out_path,
               std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    WriteFile(out_path, text);
  }
}

int Validate(const std::string& path, std::ostream& out) {
  const auto traces = LoadTraces(path);
  std::set<int> heads;
  for (const auto& t : traces) heads.insert(t.num_heads());
  IndexTraces(traces);
  out << "ok: " << traces.size() << " traces";
  if (heads.size() == 1) out << ", " << *heads.begin() << " heads";
  out << "\n";
  return kExitOk;
}

int TrainCommand(const std::string& spec_path, std::optional<std::uint64_t> seed,
                 const std::string& out_path, std::ostream& out) {
  const auto specs = LoadExperimentSpecs(spec_path, seed);
  if (!out_path.empty() && specs.size() != 1) {
    throw Error("--out needs a single-experiment config");
  }
  for (const ExperimentSpec& spec : specs) {
    const TrainingRun run = TrainOnSources(spec);
    const std::filesystem::path path =
        out_path.empty() ? spec.output_dir / "model.json"
                         : std::filesystem::path(out_path);
    SaveModel(run.model, path);
    out << "trained on";
    for (const auto& id : spec.train_dataset_ids) out << " " << id;
    out << " (" << run.model.meta.num_training_tokens << " tokens) -> "
        << path.string() << "\n";
  }
  return kExitOk;
}

int ExplainCommand(const std::string& model_path, const std::string& traces_path,
                   std::optional<double> threshold, const std::string& out_path,
                   std::ostream& out) {
  const ExpNetModel model = LoadModel(model_path);
  const auto traces = LoadTraces(traces_path);
  const double t = threshold.value_or(model.meta.threshold);
  if (!(t > 0 && t < 1)) throw Error("--threshold must lie in (0, 1)");
  std::string text;
  for (const auto& trace : traces) {
    text += ExplanationToJson(Predict(model, trace, t)).dump();
    text += '\n';
  }
  EmitLines(text, out_path, out);
  return kExitOk;
}

int BinarizeCommand(const std::string& scores_path, int k,
                    const std::string& traces_path, const std::string& out_path,
                    std::ostream& out) {
  std::vector<AttentionTrace> traces;
  std::vector<ScoreRecord> records;
  std::map<std::string, const AttentionTrace*> index;
  if (!traces_path.empty()) {
    traces = LoadTraces(traces_path);
    index = IndexTraces(traces);
    records = LoadScores(scores_path, index);
  } else {
    records = ParseScores(scores_path);
  }
  std::string text;
  for (const ScoreRecord& r : records) {
    Explanation e;
    if (r.granularity == Granularity::kToken) {
      if (index.empty()) {
        throw Error("token-granularity scores need --traces for word "
                    "aggregation (example \"" + r.example_id + "\")");
      }
      e = ExplainFromScores(*index.at(r.example_id), r, k);
    } else {
      e.example_id = r.example_id;
      e.method_id = r.method_id;
      e.word_scores = r.scores;
      e.word_mask = BinarizeTopK(r.scores, k);
    }
    text += ExplanationToJson(e).dump();
    text += '\n';
  }
  EmitLines(text, out_path, out);
  return kExitOk;
}

int EvaluateCommand(const std::string& spec_path,
                    std::optional<std::uint64_t> seed, std::ostream& out) {
  const auto specs = LoadExperimentSpecs(spec_path, seed);
  std::vector<EvalReport> all;
  for (const ExperimentSpec& spec : specs) {
    const auto result = RunExperiment(spec);
    all.insert(all.end(), result.reports.begin(), result.reports.end());
  }
  if (specs.size() > 1) {
    RenderRunDirectory(specs.front().output_dir.parent_path());
  }
  out << ResultsMarkdown(all);
  return kExitOk;
}

int AgreementCommand(const std::string& path, std::ostream& out) {
  const auto traces = LoadTraces(path);
  std::vector<std::string> annotators;
  for (const auto& t : traces) {
    for (const auto& r : t.rationales) {
      if (std::find(annotators.begin(), annotators.end(), r.annotator_id) ==
          annotators.end()) {
        annotators.push_back(r.annotator_id);
      }
    }
  }
  std::sort(annotators.begin(), annotators.end());
  Eigen::Index items = 0;
  for (const auto& t : traces) items += t.num_words();
  Eigen::MatrixXi matrix =
      Eigen::MatrixXi::Constant(static_cast<Eigen::Index>(annotators.size()),
                                items, kMissing);
  Eigen::Index offset = 0;
  for (const auto& t : traces) {
    for (const auto& r : t.rationales) {
      const auto row = std::find(annotators.begin(), annotators.end(),
                                 r.annotator_id) - annotators.begin();
      for (std::size_t w = 0; w < r.mask.size(); ++w) {
        matrix(row, offset + static_cast<Eigen::Index>(w)) = r.mask[w];
      }
    }
    offset += t.num_words();
  }
  const double alpha = KrippendorffAlpha(matrix);
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6f", alpha);
  out << "krippendorff_alpha " << buffer << " (annotators "
      << annotators.size() << ", words " << items << ")\n";
  return kExitOk;
}

int SynthCommand(const std::string& dir, int datasets, int examples,
                 int test_examples, int heads, std::uint64_t seed,
                 std::ostream& out) {
  if (datasets < 2) throw Error("--datasets must be >= 2");
  std::vector<SyntheticSpec> specs;
  Json manifests = Json::object();
  for (int d = 0; d < datasets; ++d) {
    SyntheticSpec s;
    s.dataset_id = "synth" + std::to_string(d + 1);
    s.vocab_prefix = std::string(1, static_cast<char>('a' + d % 26)) + "w";
    s.n_examples = examples;
    s.num_heads = heads;
    s.seed = seed + 100 * static_cast<std::uint64_t>(d);
    specs.push_back(s);
    manifests[s.dataset_id] = s.dataset_id + "/manifest.json";
  }
  WriteSyntheticSuite(dir, specs, test_examples);
  Json experiment = {{"format_version", kFormatVersion},
                     {"protocol", "leave_one_task_out"},
                     {"datasets", manifests},
                     {"methods", {"expnet", "random"}},
                     {"merge_policy", "majority"},
                     {"seed", seed},
                     {"output_dir", "run"}};
  WriteFile(std::filesystem::path(dir) / "experiment.json",
            experiment.dump(2) + "\n");
  out << "wrote " << datasets << " synthetic datasets and experiment.json to "
      << dir << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Learned attention explanations: train, explain, evaluate",
               "expnet-kit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Seed for every random choice");

  std::string traces_path, spec_path, model_path, scores_path, out_path,
      run_dir;
  std::optional<double> threshold;
  int k = 0;

  auto* validate = app.add_subcommand("validate", "Check a trace file");
  validate->add_option("traces", traces_path)->required();

  auto* train = app.add_subcommand("train", "Train the explainer");
  train->add_option("spec", spec_path)->required();
  train->add_option("--out", out_path, "Model path");

  auto* explain = app.add_subcommand("explain", "Explain traces with a model");
  explain->add_option("model", model_path)->required();
  explain->add_option("traces", traces_path)->required();
  explain->add_option("--threshold", threshold);
  explain->add_option("--out", out_path);

  auto* binarize =
      app.add_subcommand("binarize", "Top-K binarize external scores");
  binarize->add_option("scores", scores_path)->required();
  binarize->add_option("--k", k)->required()->check(CLI::PositiveNumber);
  binarize->add_option("--traces", traces_path,
                       "Traces for token-to-word aggregation");
  binarize->add_option("--out", out_path);

  auto* evaluate = app.add_subcommand("evaluate", "Run an experiment");
  evaluate->add_option("spec", spec_path)->required();

  auto* report = app.add_subcommand("report", "Render a run directory");
  report->add_option("run-dir", run_dir)->required();

  auto* agreement =
      app.add_subcommand("agreement", "Krippendorff's alpha of annotators");
  agreement->add_option("traces", traces_path)->required();

  int datasets = 3, examples = 300, test_examples = 150, heads = 12;
  auto* synth = app.add_subcommand("synth", "Write a synthetic suite");
  synth->add_option("--out", out_path)->required();
  synth->add_option("--datasets", datasets);
  synth->add_option("--examples", examples);
  synth->add_option("--test-examples", test_examples);
  synth->add_option("--heads", heads);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << e.what() << "\n" << app.help();
    return kExitRuntime;
  }

  try {
    if (*validate) return Validate(traces_path, out);
    if (*train) return TrainCommand(spec_path, seed, out_path, out);
    if (*explain) {
      return ExplainCommand(model_path, traces_path, threshold, out_path, out);
    }
    if (*binarize) {
      return BinarizeCommand(scores_path, k, traces_path, out_path, out);
    }
    if (*evaluate) return EvaluateCommand(spec_path, seed, out);
    if (*report) {
      const int runs = RenderRunDirectory(run_dir);
      out << "rendered " << runs << " run(s) into " << run_dir << "\n";
      return kExitOk;
    }
    if (*agreement) return AgreementCommand(traces_path, out);
    if (*synth) {
      return SynthCommand(out_path, datasets, examples, test_examples, heads,
                          seed.value_or(0), out);
    }
  } catch (const ValidationError& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ParseError& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const DimensionError& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const VersionError& e) {
    err << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace expnet
