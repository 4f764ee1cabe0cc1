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
#include <filesystem>

#include "doctest.h"

#include "cir/core/errors.hpp"
#include "cir/corpus/cirf.hpp"
#include "cir/corpus/synth.hpp"
#include "cir/curation/template_generator.hpp"
#include "cir/encoder/checkpoint.hpp"
#include "cir/encoder/tokenizer.hpp"
#include "cir/retrieval/index.hpp"
#include "cir/retrieval/retrieval.hpp"
#include "oracles/oracles.hpp"

using namespace cir;
namespace fs = std::filesystem;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.k = 4;
  c.d = 16;
  c.blocks = 1;
  c.heads = 4;
  return c;
}

oracle::Rows rows_of(const FeatureMatrix& f) {
  oracle::Rows out(f.rows(), std::vector<double>(f.dim()));
  for (std::size_t r = 0; r < f.rows(); ++r) {
    for (std::size_t c = 0; c < f.dim(); ++c) out[r][c] = f(r, c);
  }
  return out;
}

struct World {
  EncoderConfig cfg = small_config();
  SynthCorpus corpus;
  EncoderParams params;
  Index index;

  World() {
    SynthConfig sc;
    sc.images = 40;
    sc.eval_cases = 5;
    corpus = synth_corpus(sc, 11);
    params = random_params(cfg, 3);
    index = build_index(corpus.images, params);
  }

  QueryBundle bundle(std::size_t i = 0) const {
    QueryBundle b;
    b.query_id = "q" + std::to_string(i);
    b.reference = corpus.images[i];
    b.modification = "change the color to blue";
    b.generated_target_text = "a blue cube";
    return b;
  }
};

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cir_test_retrieval_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("mode names round trip") {
  for (auto m : kAllModes) CHECK(parse_mode(mode_name(m)) == m);
  CHECK(mode_name(RetrievalMode::kFused) == "fused");
  CHECK(mode_name(RetrievalMode::kBaselineImagePlusText) == "baseline_image_plus_text");
  CHECK_THROWS_AS(parse_mode("ensemble"), ValidationError);
  CHECK(needs_target_text(RetrievalMode::kFused));
  CHECK(needs_target_text(RetrievalMode::kTextOnlyGenerated));
  CHECK_FALSE(needs_target_text(RetrievalMode::kVlmOnly));
}

TEST_CASE("index holds image encodings in corpus order") {
  const World w;
  REQUIRE(w.index.size() == w.corpus.images.size());
  w.index.validate();
  for (std::size_t i = 0; i < w.index.size(); ++i) {
    CHECK(w.index.ids[i] == w.corpus.images[i].id);
    CHECK(w.index.features[i] == encode_image(w.corpus.images[i].tokens, w.params));
  }
  CHECK(w.index.params_digest == params_digest(w.params));
  CHECK(w.index.params_digest.size() == 64);
  // Threads do not change the result.
  const auto threaded = build_index(w.corpus.images, w.params, 3);
  CHECK(threaded.features == w.index.features);
}

TEST_CASE("scores match a straight-line recomputation") {
  const World w;
  const Retriever r(w.index, w.params);
  const auto b = w.bundle(2);
  const auto ref = b.reference.tokens;
  const auto mod = tokenize(b.modification, w.cfg.vocab);
  const auto tq = tokenize(*b.generated_target_text, w.cfg.vocab);
  const auto composed = rows_of(encode_composed(ref, mod, w.params));
  const auto text_q = rows_of(encode_text(tq, w.params));
  const auto image_q = rows_of(encode_image(ref, w.params));
  const auto text_m = rows_of(encode_text(mod, w.params));
  oracle::Rows mean_q = image_q;
  for (std::size_t i = 0; i < mean_q.size(); ++i) {
    for (std::size_t j = 0; j < mean_q[i].size(); ++j) {
      mean_q[i][j] = (image_q[i][j] + text_m[i][j]) / 2;
    }
  }

  const auto fused = r.score(b, RetrievalMode::kFused);
  const auto vlm = r.score(b, RetrievalMode::kVlmOnly);
  const auto txt = r.score(b, RetrievalMode::kTextOnlyGenerated);
  const auto img_only = r.score(b, RetrievalMode::kBaselineImageOnly);
  const auto mod_only = r.score(b, RetrievalMode::kBaselineTextOnly);
  const auto plus = r.score(b, RetrievalMode::kBaselineImagePlusText);
  const auto target = r.score(b, RetrievalMode::kBaselineTargetText);
  for (std::size_t j = 0; j < w.index.size(); ++j) {
    const auto cand = rows_of(w.index.features[j]);
    const double s_hat = oracle::maxsim(composed, cand);
    const double s_tilde = oracle::maxsim(text_q, cand);
    CHECK(vlm[j] == doctest::Approx(s_hat).epsilon(1e-5));
    CHECK(txt[j] == doctest::Approx(s_tilde).epsilon(1e-5));
    CHECK(fused[j] == doctest::Approx((s_hat + s_tilde) / 2).epsilon(1e-5));
    CHECK(fused[j] == (vlm[j] + txt[j]) / 2);
    CHECK(img_only[j] == doctest::Approx(oracle::maxsim(image_q, cand)).epsilon(1e-5));
    CHECK(mod_only[j] == doctest::Approx(oracle::maxsim(text_m, cand)).epsilon(1e-5));
    CHECK(plus[j] == doctest::Approx(oracle::maxsim(mean_q, cand)).epsilon(1e-5));
    CHECK(target[j] == txt[j]);
  }
  // Free functions agree with the retriever.
  CHECK(score_query(b, w.index, RetrievalMode::kFused, w.params) == fused);
}

TEST_CASE("baseline encoder drives baseline_target_text") {
  const World w;
  const auto other = random_params(w.cfg, 99);
  const Retriever r(w.index, w.params, &other);
  const auto b = w.bundle(1);
  const auto got = r.score(b, RetrievalMode::kBaselineTargetText);
  const auto tq = encode_text(tokenize(*b.generated_target_text, w.cfg.vocab), other);
  for (std::size_t j = 0; j < w.index.size(); ++j) {
    const auto cand = encode_image(w.corpus.images[j].tokens, other);
    CHECK(got[j] == doctest::Approx(oracle::maxsim(rows_of(tq), rows_of(cand))).epsilon(1e-5));
  }
  // The main modes still use the trained encoder.
  CHECK(r.score(b, RetrievalMode::kVlmOnly) ==
        Retriever(w.index, w.params).score(b, RetrievalMode::kVlmOnly));
}

TEST_CASE("ranking is a descending full sort with ties by id") {
  const std::vector<std::string> ids = {"d", "b", "a", "c", "e"};
  const std::vector<double> scores = {0.5, 0.9, 0.5, 0.9, -1.0};
  const auto full = rank_scores(ids, scores, 10);
  REQUIRE(full.size() == 5);
  CHECK(full[0].id == "b");
  CHECK(full[1].id == "c");
  CHECK(full[2].id == "a");
  CHECK(full[3].id == "d");
  CHECK(full[4].id == "e");
  const auto top2 = rank_scores(ids, scores, 2);
  REQUIRE(top2.size() == 2);
  CHECK(top2[0] == full[0]);
  CHECK(top2[1] == full[1]);
  CHECK_THROWS_AS(rank_scores(ids, scores, 0), ValidationError);
  CHECK_THROWS_AS(rank_scores(ids, {1.0}, 3), ValidationError);
}

TEST_CASE("retrieve agrees with a brute-force sort") {
  const World w;
  const Retriever r(w.index, w.params);
  for (std::size_t q = 0; q < 5; ++q) {
    const auto b = w.bundle(q);
    for (auto mode : kAllModes) {
      const auto scores = r.score(b, mode);
      std::vector<std::size_t> order(scores.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        if (scores[a] != scores[c]) return scores[a] > scores[c];
        return w.index.ids[a] < w.index.ids[c];
      });
      const auto got = r.retrieve(b, mode, 10);
      REQUIRE(got.size() == 10);
      for (std::size_t i = 0; i < 10; ++i) {
        CHECK(got[i].id == w.index.ids[order[i]]);
        CHECK(got[i].score == scores[order[i]]);
      }
      // topk past the corpus size yields the whole corpus.
      CHECK(r.retrieve(b, mode, 1000).size() == w.index.size());
    }
  }
  CHECK(retrieve(w.bundle(0), w.index, RetrievalMode::kFused, w.params, 5) ==
        r.retrieve(w.bundle(0), RetrievalMode::kFused, 5));
}

TEST_CASE("queries needing target text fail without it") {
  const World w;
  const Retriever r(w.index, w.params);
  auto b = w.bundle(0);
  b.generated_target_text.reset();
  CHECK_THROWS_AS(r.score(b, RetrievalMode::kFused), ValidationError);
  CHECK_THROWS_AS(r.score(b, RetrievalMode::kTextOnlyGenerated), ValidationError);
  CHECK_NOTHROW(r.score(b, RetrievalMode::kVlmOnly));
  b.modification.clear();
  CHECK_THROWS_AS(r.score(b, RetrievalMode::kVlmOnly), ValidationError);
  auto wrong = w.bundle(0);
  wrong.reference.tokens = FeatureMatrix(4, 3);
  CHECK_THROWS_AS(r.score(wrong, RetrievalMode::kVlmOnly), ValidationError);
}

TEST_CASE("target text generation fills the bundle") {
  const World w;
  const TemplateGenerator gen(SynthConfig::default_families(), 1);
  auto b = w.bundle(0);
  b.generated_target_text.reset();
  const auto& text = generate_query_target_text(b, gen);
  REQUIRE(b.generated_target_text.has_value());
  CHECK(text == *b.generated_target_text);
  CHECK_FALSE(text.empty());
  const Retriever r(w.index, w.params);
  CHECK_NOTHROW(r.score(b, RetrievalMode::kFused));
}

TEST_CASE("bundle from an eval case") {
  const World w;
  const ImageLookup lookup(w.corpus.images);
  const auto& c = w.corpus.eval_cases[0];
  const auto b = bundle_for_case(c, lookup);
  CHECK(b.query_id == c.query_id);
  CHECK(b.reference.id == c.ref_id);
  CHECK(b.modification == c.modification);
  CHECK_FALSE(b.generated_target_text.has_value());
  auto bad = c;
  bad.ref_id = "missing";
  CHECK_THROWS(bundle_for_case(bad, lookup));
}

TEST_CASE("index save and load") {
  const World w;
  const auto dir = scratch_dir("save");
  save_index(w.index, dir);
  CHECK(fs::exists(dir / "index.json"));
  const auto back = load_index(dir);
  CHECK(back.ids == w.index.ids);
  CHECK(back.features == w.index.features);
  CHECK(back.params_digest == w.index.params_digest);
  CHECK(config_to_json(back.config) == config_to_json(w.index.config));
  fs::remove(dir / "features.cirf");
  CHECK_THROWS_AS(load_index(dir), IoError);
  fs::remove_all(dir);
}

TEST_CASE("stale indexes are re-encoded") {
  const World w;
  const auto same = reencode_if_stale(w.index, w.params);
  CHECK(same.features == w.index.features);
  const auto other = random_params(w.cfg, 4);
  const auto fresh = reencode_if_stale(w.index, other);
  CHECK(fresh.params_digest == params_digest(other));
  CHECK(fresh.features == build_index(w.corpus.images, other).features);
  CHECK_FALSE(fresh.features == w.index.features);
}
