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

#include <algorithm>

#include "doctest.h"

#include "cir/core/errors.hpp"
#include "cir/core/rng.hpp"
#include "cir/corpus/synth.hpp"
#include "cir/curation/template_generator.hpp"
#include "cir/metrics/metrics.hpp"
#include "oracles/oracles.hpp"

using namespace cir;

namespace {

RankedList ranked(const std::vector<std::string>& ids) {
  RankedList out;
  double s = 1.0;
  for (const auto& id : ids) out.push_back({id, s -= 0.01});
  return out;
}

std::vector<std::string> ids_of(const RankedList& r) {
  std::vector<std::string> out;
  for (const auto& e : r) out.push_back(e.id);
  return out;
}

EvalCase make_case(std::string qid, std::vector<std::string> gold,
                   std::optional<std::string> category = std::nullopt) {
  EvalCase c;
  c.query_id = std::move(qid);
  c.ref_id = "r";
  c.modification = "m";
  c.gold_ids = std::move(gold);
  c.category = std::move(category);
  return c;
}

}  // namespace

TEST_CASE("recall examples") {
  const auto r = ranked({"c3", "c1", "c2"});
  CHECK(recall_at_k(r, {"c1"}, 1) == 0.0);
  CHECK(recall_at_k(r, {"c1"}, 2) == 1.0);
  CHECK(recall_at_k(r, {"c1", "c3"}, 1) == 1.0);
  CHECK(recall_at_k(r, {"c9"}, 50) == 0.0);
  CHECK_THROWS_AS(recall_at_k(r, {"c1"}, 0), ValidationError);
  CHECK_THROWS_AS(recall_at_k(r, {}, 1), ValidationError);
}

TEST_CASE("average precision examples") {
  const auto r = ranked({"g1", "x", "g2"});
  CHECK(map_at_k(r, {"g1", "g2"}, 3) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(map_at_k(r, {"g1", "g2"}, 2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(map_at_k(r, {"g1", "g2"}, 1) == 1.0);
  CHECK(map_at_k(r, {"x"}, 3) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(map_at_k(r, {"y"}, 3) == 0.0);
}

TEST_CASE("subset recall filters to the subset") {
  const auto r = ranked({"x", "s2", "s1", "s3"});
  const std::vector<std::string> subset = {"s1", "s2", "s3"};
  CHECK(recall_at_k(r, {"s2"}, 1) == 0.0);
  CHECK(subset_recall_at_k(r, {"s2"}, subset, 1) == 1.0);
  CHECK(subset_recall_at_k(r, {"s1"}, subset, 1) == 0.0);
  CHECK(subset_recall_at_k(r, {"s1"}, subset, 2) == 1.0);
  CHECK_THROWS_AS(subset_recall_at_k(r, {"x"}, subset, 1), ValidationError);
}

TEST_CASE("metrics agree with definitional oracles on random rankings") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng.below(30);
    std::vector<std::string> ids;
    std::vector<double> scores;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("c" + std::to_string(i));
      // Coarse scores produce ties.
      scores.push_back(static_cast<double>(rng.below(6)));
    }
    const auto list = rank_scores(ids, scores, n);
    std::vector<std::string> gold, subset;
    for (const auto& id : ids) {
      const bool in_subset = rng.uniform() < 0.5;
      if (in_subset) subset.push_back(id);
      if (in_subset && rng.uniform() < 0.3) gold.push_back(id);
    }
    if (gold.empty()) {
      gold.push_back(ids[0]);
      if (!oracle::member(subset, ids[0])) subset.push_back(ids[0]);
    }
    for (std::size_t k : {1, 2, 3, 5, 10, 50}) {
      CHECK(recall_at_k(list, gold, k) == oracle::recall(ids_of(list), gold, k));
      CHECK(map_at_k(list, gold, k) ==
            doctest::Approx(oracle::average_precision(ids_of(list), gold, k)).epsilon(1e-12));
      CHECK(subset_recall_at_k(list, gold, subset, k) ==
            oracle::subset_recall(ids, scores, gold, subset, k));
    }
  }
}

TEST_CASE("metric spec parsing") {
  const auto d = MetricSpec::defaults();
  CHECK(d.names() == std::vector<std::string>{"R@1", "R@5", "R@10", "R@50", "mAP@5",
                                              "mAP@10", "mAP@25", "mAP@50", "Rs@1",
                                              "Rs@2", "Rs@3"});
  CHECK(d.needs_subsets());
  const auto p = MetricSpec::parse("R@1, mAP@10,Rs@2");
  REQUIRE(p.metrics.size() == 3);
  CHECK(p.metrics[1] == Metric{MetricKind::kMap, 10});
  CHECK(p.metrics[2].name() == "Rs@2");
  CHECK_FALSE(MetricSpec::parse("R@5").needs_subsets());
  CHECK_THROWS_AS(MetricSpec::parse("P@5"), ValidationError);
  CHECK_THROWS_AS(MetricSpec::parse("R@0"), ValidationError);
  CHECK_THROWS_AS(MetricSpec::parse("R@x"), ValidationError);
  CHECK_THROWS_AS(MetricSpec::parse("R@1,R@1"), ValidationError);
  CHECK_THROWS_AS(MetricSpec::parse(""), ValidationError);
}

TEST_CASE("subset metrics require subset ids") {
  const auto c = make_case("q", {"a"});
  CHECK_THROWS_AS(evaluate_case(c, ranked({"a"}), MetricSpec::parse("Rs@1")),
                  ValidationError);
  CHECK(evaluate_case(c, ranked({"a"}), MetricSpec::parse("R@1")).values.at("R@1") == 1.0);
}

TEST_CASE("category macro average differs from the pooled mean") {
  const auto spec = MetricSpec::parse("R@1");
  std::vector<CaseResult> details;
  for (int i = 0; i < 5; ++i) {
    details.push_back(evaluate_case(make_case("a" + std::to_string(i), {i < 1 ? "x" : "y"}, "dress"),
                                    ranked({"x"}), spec));
  }
  for (int i = 0; i < 10; ++i) {
    details.push_back(evaluate_case(make_case("b" + std::to_string(i), {i < 4 ? "x" : "y"}, "shirt"),
                                    ranked({"x"}), spec));
  }
  const auto rep = aggregate("fused", spec, details);
  CHECK(rep.categories.at("dress").at("R@1") == doctest::Approx(0.2));
  CHECK(rep.categories.at("shirt").at("R@1") == doctest::Approx(0.4));
  REQUIRE(rep.category_average.has_value());
  CHECK(rep.category_average->at("R@1") == doctest::Approx(0.3));
  CHECK(rep.metrics.at("R@1") == doctest::Approx(5.0 / 15.0));
  CHECK_FALSE(rep.cirr_avg.has_value());
  CHECK(rep.details.size() == 15);
  const auto j = rep.to_json();
  CHECK(j.at("mode") == "fused");
  CHECK(j.at("metrics").at("R@1").get<double>() == doctest::Approx(1.0 / 3.0));
  CHECK(j.at("category_average").at("R@1").get<double>() == doctest::Approx(0.3));
}

TEST_CASE("cirr average and the results table") {
  const auto spec = MetricSpec::parse("R@5,Rs@1");
  auto c = make_case("q", {"g"});
  c.subset_ids = std::vector<std::string>{"g", "s"};
  const auto hit = evaluate_case(c, ranked({"x", "s", "g"}), spec);
  CHECK(hit.values.at("R@5") == 1.0);
  CHECK(hit.values.at("Rs@1") == 0.0);
  const auto rep = aggregate("vlm_only", spec, {hit});
  REQUIRE(rep.cirr_avg.has_value());
  CHECK(*rep.cirr_avg == doctest::Approx(0.5));
  CHECK_FALSE(rep.category_average.has_value());

  const auto table = format_table({rep});
  CHECK(table.find("Mode") == 0);
  CHECK(table.find("R@5") != std::string::npos);
  CHECK(table.find("Avg") != std::string::npos);
  CHECK(table.find("100.00") != std::string::npos);
  CHECK(table.find("50.00") != std::string::npos);
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);
  CHECK_THROWS_AS(aggregate("m", spec, {}), ValidationError);
}

TEST_CASE("evaluate_suite matches per-case evaluation") {
  SynthConfig sc;
  sc.images = 60;
  sc.eval_cases = 8;
  const auto corpus = synth_corpus(sc, 21);
  EncoderConfig cfg;
  cfg.k = 4;
  cfg.d = 16;
  cfg.blocks = 1;
  cfg.heads = 4;
  const auto params = random_params(cfg, 1);
  const auto index = build_index(corpus.images, params);
  const Retriever retriever(index, params);
  const TemplateGenerator gen(sc.families, 3);
  const ImageLookup lookup(corpus.images);
  SuiteOptions opts;
  opts.generator = &gen;
  const auto rep = evaluate_suite(corpus.eval_cases, lookup, retriever,
                                  RetrievalMode::kFused, opts);
  CHECK(rep.mode == "fused");
  REQUIRE(rep.details.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto& c = corpus.eval_cases[i];
    auto b = bundle_for_case(c, lookup);
    generate_query_target_text(b, gen);
    const auto want = evaluate_case(c, retriever.retrieve(b, RetrievalMode::kFused, index.size()),
                                    opts.spec);
    CHECK(rep.details[i].query_id == c.query_id);
    CHECK(rep.details[i].values == want.values);
  }
  opts.threads = 3;
  const auto threaded = evaluate_suite(corpus.eval_cases, lookup, retriever,
                                       RetrievalMode::kFused, opts);
  CHECK(threaded.metrics == rep.metrics);
  REQUIRE(rep.category_average.has_value());

  opts.generator = nullptr;
  CHECK_THROWS_AS(evaluate_suite(corpus.eval_cases, lookup, retriever,
                                 RetrievalMode::kFused, opts),
                  ValidationError);
  CHECK_NOTHROW(evaluate_suite(corpus.eval_cases, lookup, retriever,
                               RetrievalMode::kVlmOnly, opts));
}
