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

#ifndef EXPNET_REPORT_H_
#define EXPNET_REPORT_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "expnet/baseline.h"
#include "expnet/metrics.h"
#include "expnet/trace.h"

namespace expnet {

// Everything needed to draw the highlight pages of one test dataset.
struct ReportDataset {
  std::string dataset_id;
  std::vector<AttentionTrace> traces;
  std::vector<WordMask> gold;  // parallel to traces
  // method_id -> explanations, matched to traces by example_id.
  std::map<std::string, std::vector<Explanation>> explanations;
};

// The word strings of a trace, subword pieces joined and "##" stripped.
std::vector<std::string> WordStrings(const AttentionTrace& trace);

// Methods x datasets table of F1 with its interval, plus P/R/AUROC/AUPR.
Json ResultsTable(const std::vector<EvalReport>& reports);
std::string ResultsMarkdown(const std::vector<EvalReport>& reports);

// Writes results.json and results.md into out_dir, plus html/index.html and
// one page per example under html/<dataset_id>/ comparing the gold
// rationale with each method's word mask. A method with no explanation for
// an example is shown as absent.
void RenderReport(const std::vector<EvalReport>& reports,
                  const std::vector<ReportDataset>& datasets,
                  const std::filesystem::path& out_dir);

// Re-renders from run directories: `run_dir` itself when it holds a
// manifest.json, otherwise each immediate subdirectory that does.
// Returns the number of runs found.
int RenderRunDirectory(const std::filesystem::path& run_dir);

}  // namespace expnet

#endif  // EXPNET_REPORT_H_
