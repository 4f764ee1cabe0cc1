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

#include "cir/metrics/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_set>

#include "cir/core/errors.hpp"
#include "cir/core/parallel.hpp"

namespace cir {

using nlohmann::json;

namespace {

void check_k(std::size_t k) {
  if (k == 0) throw ValidationError("metric cutoff K must be >= 1");
}

void check_gold(const std::vector<std::string>& gold) {
  if (gold.empty()) throw ValidationError("metric needs a nonempty gold set");
}

}  // namespace

double recall_at_k(const RankedList& ranking,
                   const std::vector<std::string>& gold, std::size_t k) {
  check_k(k);
  check_gold(gold);
  const std::unordered_set<std::string> g(gold.begin(), gold.end());
  const std::size_t n = std::min(k, ranking.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (g.contains(ranking[r].id)) return 1.0;
  }
  return 0.0;
}

double map_at_k(const RankedList& ranking, const std::vector<std::string>& gold,
                std::size_t k) {
  check_k(k);
  check_gold(gold);
  const std::unordered_set<std::string> g(gold.begin(), gold.end());
  const std::size_t n = std::min(k, ranking.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (g.contains(ranking[r].id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(std::min(g.size(), k));
}

double subset_recall_at_k(const RankedList& ranking,
                          const std::vector<std::string>& gold,
                          const std::vector<std::string>& subset,
                          std::size_t k) {
  const std::unordered_set<std::string> s(subset.begin(), subset.end());
  for (const auto& id : gold) {
    if (!s.contains(id)) {
      throw ValidationError("subset recall: gold id '" + id +
                            "' is not in the subset");
    }
  }
  RankedList filtered;
  for (const auto& e : ranking) {
    if (s.contains(e.id)) filtered.push_back(e);
  }
  return recall_at_k(filtered, gold, k);
}

std::string Metric::name() const {
  switch (kind) {
    case MetricKind::kRecall: return "R@" + std::to_string(k);
    case MetricKind::kMap: return "mAP@" + std::to_string(k);
    case MetricKind::kSubsetRecall: return "Rs@" + std::to_string(k);
  }
  return {};
}

MetricSpec MetricSpec::defaults() {
  MetricSpec s;
  for (std::size_t k : {1, 5, 10, 50}) s.metrics.push_back({MetricKind::kRecall, k});
  for (std::size_t k : {5, 10, 25, 50}) s.metrics.push_back({MetricKind::kMap, k});
  for (std::size_t k : {1, 2, 3}) s.metrics.push_back({MetricKind::kSubsetRecall, k});
  return s;
}

MetricSpec MetricSpec::parse(const std::string& text) {
  MetricSpec s;
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    const auto at = item.find('@');
    if (at == std::string::npos) {
      throw ValidationError("metric '" + item + "': expected NAME@K");
    }
    const std::string head = item.substr(0, at);
    const std::string tail = item.substr(at + 1);
    MetricKind kind;
    if (head == "R") kind = MetricKind::kRecall;
    else if (head == "mAP") kind = MetricKind::kMap;
    else if (head == "Rs") kind = MetricKind::kSubsetRecall;
    else throw ValidationError("unknown metric '" + head + "'");
    if (tail.empty() ||
        tail.find_first_not_of("0123456789") != std::string::npos) {
      throw ValidationError("metric '" + item + "': K must be a positive integer");
    }
    const std::size_t k = std::stoul(tail);
    check_k(k);
    Metric m{kind, k};
    if (!seen.insert(m.name()).second) {
      throw ValidationError("metric '" + m.name() + "' listed twice");
    }
    s.metrics.push_back(m);
  }
  if (s.metrics.empty()) throw ValidationError("metric list is empty");
  return s;
}

bool MetricSpec::needs_subsets() const {
  return std::any_of(metrics.begin(), metrics.end(), [](const Metric& m) {
    return m.kind == MetricKind::kSubsetRecall;
  });
}

std::vector<std::string> MetricSpec::names() const {
  std::vector<std::string> out;
  for (const auto& m : metrics) out.push_back(m.name());
  return out;
}

CaseResult evaluate_case(const EvalCase& c, const RankedList& ranking,
                         const MetricSpec& spec) {
  CaseResult out{c.query_id, c.category, {}};
  for (const auto& m : spec.metrics) {
    double v = 0.0;
    switch (m.kind) {
      case MetricKind::kRecall: v = recall_at_k(ranking, c.gold_ids, m.k); break;
      case MetricKind::kMap: v = map_at_k(ranking, c.gold_ids, m.k); break;
      case MetricKind::kSubsetRecall:
        if (!c.subset_ids) {
          throw ValidationError("case '" + c.query_id + "': " + m.name() +
                                " requested but the case has no subset_ids");
        }
        v = subset_recall_at_k(ranking, c.gold_ids, *c.subset_ids, m.k);
        break;
    }
    out.values[m.name()] = v;
  }
  return out;
}

namespace {

std::map<std::string, double> mean_of(const std::vector<const CaseResult*>& rows,
                                      const std::vector<std::string>& names) {
  std::map<std::string, double> out;
  for (const auto& n : names) {
    double sum = 0.0;
    for (const auto* r : rows) sum += r->values.at(n);
    out[n] = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
  }
  return out;
}

}  // namespace

EvalReport aggregate(std::string mode, const MetricSpec& spec,
                     std::vector<CaseResult> details) {
  if (details.empty()) throw ValidationError("evaluate: no cases");
  EvalReport rep;
  rep.mode = std::move(mode);
  rep.metric_names = spec.names();
  rep.details = std::move(details);

  std::vector<const CaseResult*> all;
  std::map<std::string, std::vector<const CaseResult*>> by_cat;
  for (const auto& d : rep.details) {
    all.push_back(&d);
    if (d.category) by_cat[*d.category].push_back(&d);
  }
  rep.metrics = mean_of(all, rep.metric_names);
  for (const auto& [cat, rows] : by_cat) {
    rep.categories[cat] = mean_of(rows, rep.metric_names);
  }
  if (!rep.categories.empty()) {
    std::map<std::string, double> avg;
    for (const auto& n : rep.metric_names) {
      double sum = 0.0;
      for (const auto& [_, values] : rep.categories) sum += values.at(n);
      avg[n] = sum / static_cast<double>(rep.categories.size());
    }
    rep.category_average = std::move(avg);
  }
  if (rep.metrics.contains("R@5") && rep.metrics.contains("Rs@1")) {
    rep.cirr_avg = 0.5 * (rep.metrics.at("R@5") + rep.metrics.at("Rs@1"));
  }
  return rep;
}

json EvalReport::to_json() const {
  json j;
  j["mode"] = mode;
  j["case_count"] = details.size();
  j["metric_names"] = metric_names;
  j["metrics"] = metrics;
  j["categories"] = categories;
  j["category_average"] =
      category_average ? json(*category_average) : json(nullptr);
  j["cirr_avg"] = cirr_avg ? json(*cirr_avg) : json(nullptr);
  json rows = json::array();
  for (const auto& d : details) {
    rows.push_back({{"query_id", d.query_id},
                    {"category", d.category ? json(*d.category) : json(nullptr)},
                    {"values", d.values}});
  }
  j["details"] = std::move(rows);
  return j;
}

EvalReport evaluate_suite(const std::vector<EvalCase>& cases,
                          const ImageLookup& references,
                          const Retriever& retriever, RetrievalMode mode,
                          const SuiteOptions& options) {
  if (cases.empty()) throw ValidationError("evaluate: no cases");
  if (needs_target_text(mode) && options.generator == nullptr) {
    throw ValidationError("evaluate: mode " + std::string(mode_name(mode)) +
                          " needs a text generator for target texts");
  }
  const Index& index = retriever.index();
  ImageLookup candidates(index.raw);
  validate_cases(cases, candidates);
  for (const auto& c : cases) {
    if (options.spec.needs_subsets() && !c.subset_ids) {
      throw ValidationError("case '" + c.query_id +
                            "': subset recall requested but the case has no "
                            "subset_ids");
    }
    if (!references.contains(c.ref_id)) {
      throw ValidationError("case '" + c.query_id + "': unknown reference '" +
                            c.ref_id + "'");
    }
  }

  std::vector<CaseResult> details(cases.size());
  parallel_for(cases.size(), options.threads, [&](std::size_t i) {
    QueryBundle bundle = bundle_for_case(cases[i], references);
    if (needs_target_text(mode)) {
      generate_query_target_text(bundle, *options.generator, options.prompts);
    }
    const auto ranking = retriever.retrieve(bundle, mode, index.size());
    details[i] = evaluate_case(cases[i], ranking, options.spec);
  });
  return aggregate(std::string(mode_name(mode)), options.spec,
                   std::move(details));
}

std::string format_table(const std::vector<EvalReport>& reports) {
  if (reports.empty()) return {};
  const auto& names = reports.front().metric_names;
  const bool with_avg = std::all_of(reports.begin(), reports.end(),
                                    [](const EvalReport& r) { return r.cirr_avg.has_value(); });
  std::size_t mode_w = 4;
  for (const auto& r : reports) mode_w = std::max(mode_w, r.mode.size());
  std::vector<std::string> cols = names;
  if (with_avg) cols.push_back("Avg");
  std::vector<std::size_t> widths;
  for (const auto& c : cols) widths.push_back(std::max<std::size_t>(c.size(), 6));

  std::ostringstream out;
  const auto pad = [&](const std::string& s, std::size_t w, bool left) {
    if (s.size() >= w) return s;
    return left ? s + std::string(w - s.size(), ' ')
                : std::string(w - s.size(), ' ') + s;
  };
  out << pad("Mode", mode_w, true);
  for (std::size_t i = 0; i < cols.size(); ++i) out << "  " << pad(cols[i], widths[i], false);
  out << '\n';
  out << std::string(mode_w, '-');
  for (auto w : widths) out << "  " << std::string(w, '-');
  out << '\n';
  for (const auto& r : reports) {
    out << pad(r.mode, mode_w, true);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      double v = 0.0;
      if (with_avg && i + 1 == cols.size()) {
        v = *r.cirr_avg;
      } else {
        const auto it = r.metrics.find(cols[i]);
        if (it == r.metrics.end()) {
          throw ValidationError("format_table: reports use different metrics");
        }
        v = it->second;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
      out << "  " << pad(buf, widths[i], false);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cir
