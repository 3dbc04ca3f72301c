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

#include "expnet/report.h"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "expnet/harness.h"

namespace expnet {
namespace {

std::string Fixed(double value, int digits = 3) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
  return buffer;
}

std::string HtmlEscape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

// File-system safe form of an example id.
std::string PageName(const std::string& example_id) {
  std::string out;
  for (char c : example_id) {
    const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    out += safe ? c : '_';
  }
  if (out.empty() || out[0] == '.') out.insert(out.begin(), '_');
  return out + ".html";
}

// Methods and datasets in first-appearance order.
std::pair<std::vector<std::string>, std::vector<std::string>> Axes(
    const std::vector<EvalReport>& reports) {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  for (const EvalReport& r : reports) {
    if (std::find(methods.begin(), methods.end(), r.method_id) == methods.end()) {
      methods.push_back(r.method_id);
    }
    if (std::find(datasets.begin(), datasets.end(), r.dataset_id) ==
        datasets.end()) {
      datasets.push_back(r.dataset_id);
    }
  }
  return {methods, datasets};
}

constexpr const char* kStyle =
    "body{font-family:sans-serif;margin:2em}"
    "table{border-collapse:collapse}td,th{padding:4px 8px;text-align:left}"
    ".w{padding:1px 3px;margin:1px;display:inline-block}"
    ".on{background:#f4c542}.absent{color:#999;font-style:italic}";

std::string HighlightRow(const std::vector<std::string>& words,
                         const WordMask& mask) {
  std::string row;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const bool on = w < mask.size() && mask[w];
    row += "<span class=\"w";
    row += on ? " on" : "";
    row += "\">" + HtmlEscape(words[w]) + "</span>";
  }
  return row;
}

std::string ExamplePage(const ReportDataset& dataset, std::size_t index,
                        const std::vector<std::string>& methods) {
  const AttentionTrace& trace = dataset.traces[index];
  const auto words = WordStrings(trace);
  std::ostringstream page;
  page << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>"
       << HtmlEscape(trace.example_id) << "</title><style>" << kStyle
       << "</style></head><body>\n";
  page << "<h1>" << HtmlEscape(dataset.dataset_id) << " / "
       << HtmlEscape(trace.example_id) << "</h1>\n";
  page << "<p>gold label " << trace.label_gold << ", predicted "
       << trace.label_pred << "</p>\n<table>\n";
  page << "<tr><th>gold</th><td>" << HighlightRow(words, dataset.gold[index])
       << "</td></tr>\n";
  for (const std::string& method : methods) {
    page << "<tr><th>" << HtmlEscape(method) << "</th><td>";
    const Explanation* found = nullptr;
    if (auto it = dataset.explanations.find(method);
        it != dataset.explanations.end()) {
      for (const Explanation& e : it->second) {
        if (e.example_id == trace.example_id) {
          found = &e;
          break;
        }
      }
    }
    if (found != nullptr) {
      page << HighlightRow(words, found->word_mask);
    } else {
      page << "<span class=\"absent\">absent</span>";
    }
    page << "</td></tr>\n";
  }
  page << "</table>\n</body></html>\n";
  return page.str();
}

}  // namespace

std::vector<std::string> WordStrings(const AttentionTrace& trace) {
  std::vector<std::string> words(trace.num_words());
  for (int j = 0; j < trace.num_tokens(); ++j) {
    if (!trace.word_ids[j]) continue;
    std::string piece = trace.tokens[j];
    if (piece.rfind("##", 0) == 0) piece.erase(0, 2);
    words[*trace.word_ids[j]] += piece;
  }
  return words;
}

Json ResultsTable(const std::vector<EvalReport>& reports) {
  const auto [methods, datasets] = Axes(reports);
  Json table;
  table["format_version"] = kFormatVersion;
  table["methods"] = methods;
  table["datasets"] = datasets;
  Json cells = Json::object();
  for (const EvalReport& r : reports) {
    cells[r.method_id][r.dataset_id] = {
        {"f1", r.f1},
        {"f1_ci_low", r.f1_ci_low},
        {"f1_ci_high", r.f1_ci_high},
        {"precision", r.precision},
        {"recall", r.recall},
        {"auroc", r.auroc ? Json(*r.auroc) : Json(nullptr)},
        {"aupr", r.aupr ? Json(*r.aupr) : Json(nullptr)},
        {"n_examples", r.n_examples},
        {"n_words", r.n_words}};
  }
  table["cells"] = std::move(cells);
  return table;
}

std::string ResultsMarkdown(const std::vector<EvalReport>& reports) {
  const auto [methods, datasets] = Axes(reports);
  std::ostringstream md;
  md << "| Method |";
  for (const auto& d : datasets) md << " " << d << " F1 [95% CI] | P | R |";
  md << "\n|---|";
  for (std::size_t i = 0; i < datasets.size(); ++i) md << "---|---|---|";
  md << "\n";
  for (const auto& m : methods) {
    md << "| " << m << " |";
    for (const auto& d : datasets) {
      auto it = std::find_if(reports.begin(), reports.end(),
                             [&](const EvalReport& r) {
                               return r.method_id == m && r.dataset_id == d;
                             });
      if (it == reports.end()) {
        md << " - | - | - |";
      } else {
        md << " " << Fixed(it->f1) << " [" << Fixed(it->f1_ci_low) << ", "
           << Fixed(it->f1_ci_high) << "] | " << Fixed(it->precision) << " | "
           << Fixed(it->recall) << " |";
      }
    }
    md << "\n";
  }
  return md.str();
}

void RenderReport(const std::vector<EvalReport>& reports,
                  const std::vector<ReportDataset>& datasets,
                  const std::filesystem::path& out_dir) {
  WriteFile(out_dir / "results.json", ResultsTable(reports).dump(2) + "\n");
  WriteFile(out_dir / "results.md", ResultsMarkdown(reports));

  const auto methods = Axes(reports).first;
  std::ostringstream index;
  index << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        << "<title>Explanations</title><style>" << kStyle
        << "</style></head><body>\n<h1>Explanations</h1>\n";
  for (const ReportDataset& dataset : datasets) {
    if (dataset.gold.size() != dataset.traces.size()) {
      throw DimensionError("dataset \"" + dataset.dataset_id +
                           "\": gold and trace counts differ");
    }
    index << "<h2>" << HtmlEscape(dataset.dataset_id) << "</h2>\n<ul>\n";
    std::set<std::string> used;
    for (std::size_t i = 0; i < dataset.traces.size(); ++i) {
      std::string name = PageName(dataset.traces[i].example_id);
      while (!used.insert(name).second) name = "_" + name;
      WriteFile(out_dir / "html" / dataset.dataset_id / name,
                ExamplePage(dataset, i, methods));
      index << "<li><a href=\"" << HtmlEscape(dataset.dataset_id) << "/"
            << HtmlEscape(name) << "\">"
            << HtmlEscape(dataset.traces[i].example_id) << "</a></li>\n";
    }
    index << "</ul>\n";
  }
  index << "</body></html>\n";
  WriteFile(out_dir / "html" / "index.html", index.str());
}

int RenderRunDirectory(const std::filesystem::path& run_dir) {
  std::vector<std::filesystem::path> runs;
  if (std::filesystem::exists(run_dir / "manifest.json")) {
    runs.push_back(run_dir);
  } else if (std::filesystem::is_directory(run_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
      if (entry.is_directory() &&
          std::filesystem::exists(entry.path() / "manifest.json")) {
        runs.push_back(entry.path());
      }
    }
    std::sort(runs.begin(), runs.end());
  }
  if (runs.empty()) {
    throw IoError("no run manifest under " + run_dir.string());
  }

  std::vector<EvalReport> reports;
  std::vector<ReportDataset> datasets;
  for (const auto& run : runs) {
    const Json manifest = Json::parse(ReadFile(run / "manifest.json"));
    CheckFormatVersion(manifest);
    const MergePolicy policy =
        MergePolicy::FromJson(manifest.at("merge_policy"));
    ReportDataset dataset;
    dataset.dataset_id = manifest.at("test_dataset_id").get<std::string>();
    for (const auto& file : manifest.at("test_trace_files")) {
      const std::filesystem::path path = file.get<std::string>();
      auto traces =
          FilterCorrect(LoadTraces(path.is_absolute() ? path : run / path));
      std::move(traces.begin(), traces.end(),
                std::back_inserter(dataset.traces));
    }
    for (const auto& t : dataset.traces) {
      dataset.gold.push_back(MergeRationales(t, policy).word_mask);
    }
    for (const auto& m : manifest.at("methods")) {
      const auto method = m.at("method_id").get<std::string>();
      const auto report_path = run / "reports" / (method + ".json");
      if (std::filesystem::exists(report_path)) {
        reports.push_back(EvalReportFromJson(Json::parse(ReadFile(report_path))));
      }
      const auto explanation_path = run / "explanations" / (method + ".jsonl");
      if (std::filesystem::exists(explanation_path)) {
        dataset.explanations[method] = LoadExplanations(explanation_path);
      }
    }
    datasets.push_back(std::move(dataset));
  }
  RenderReport(reports, datasets, run_dir);
  return static_cast<int>(runs.size());
}

}  // namespace expnet
