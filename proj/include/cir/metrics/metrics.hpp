// Copyright 2026 The CIR Engine Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cir/corpus/records.hpp"
#include "cir/curation/generator.hpp"
#include "cir/curation/prompts.hpp"
#include "cir/retrieval/retrieval.hpp"

namespace cir {

// 1 if any gold id is among the first k entries, else 0.
double recall_at_k(const RankedList& ranking,
                   const std::vector<std::string>& gold, std::size_t k);

// Truncated average precision:
//   (1 / min(|gold|, k)) * sum_{r <= k, ranking[r] in gold} precision@r
double map_at_k(const RankedList& ranking, const std::vector<std::string>& gold,
                std::size_t k);

// Recall after keeping only subset members, in ranking order. Throws
// ValidationError unless gold is contained in subset.
double subset_recall_at_k(const RankedList& ranking,
                          const std::vector<std::string>& gold,
                          const std::vector<std::string>& subset,
                          std::size_t k);

enum class MetricKind { kRecall, kMap, kSubsetRecall };

struct Metric {
  MetricKind kind;
  std::size_t k;

  // "R@10", "mAP@5", "Rs@1"
  std::string name() const;
  bool operator==(const Metric&) const = default;
};

struct MetricSpec {
  std::vector<Metric> metrics;

  // R@{1,5,10,50}, mAP@{5,10,25,50}, Rs@{1,2,3}
  static MetricSpec defaults();
  // Comma-separated names, e.g. "R@1,R@5,mAP@10,Rs@1". Throws
  // ValidationError on unknown names, K = 0 or duplicates.
  static MetricSpec parse(const std::string& text);
  bool needs_subsets() const;
  std::vector<std::string> names() const;
};

struct CaseResult {
  std::string query_id;
  std::optional<std::string> category;
  std::map<std::string, double> values;
};

struct EvalReport {
  std::string mode;
  std::vector<std::string> metric_names;  // spec order
  std::map<std::string, double> metrics;  // mean over all cases
  // Per-category means and, when categories exist, their macro average
  // (the FashionIQ-style "Average" row).
  std::map<std::string, std::map<std::string, double>> categories;
  std::optional<std::map<std::string, double>> category_average;
  // mean(R@5, Rs@1) when both are requested.
  std::optional<double> cirr_avg;
  std::vector<CaseResult> details;

  nlohmann::json to_json() const;
};

// Scores one case per metric from its ranking (which must cover every
// candidate for subset recall to be exact).
CaseResult evaluate_case(const EvalCase& c, const RankedList& ranking,
                         const MetricSpec& spec);

// Recomputes every aggregate from `details`.
EvalReport aggregate(std::string mode, const MetricSpec& spec,
                     std::vector<CaseResult> details);

struct SuiteOptions {
  MetricSpec spec = MetricSpec::defaults();
  // Generates t_q for modes that need it.
  const TextGenerator* generator = nullptr;
  PromptSet prompts = default_prompts();
  std::size_t threads = 1;
};

// Per-case retrieval over the whole index, then aggregation. Reference
// images are looked up in `references`. Throws ValidationError on an empty
// suite, on Rs@K without subset_ids, or when a mode needs t_q and no
// generator is given.
EvalReport evaluate_suite(const std::vector<EvalCase>& cases,
                          const ImageLookup& references,
                          const Retriever& retriever, RetrievalMode mode,
                          const SuiteOptions& options);

// Aligned text table: one row per report, one column per metric, then
// cirr_avg when every report has it.
std::string format_table(const std::vector<EvalReport>& reports);

}  // namespace cir
