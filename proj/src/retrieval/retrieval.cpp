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

#include "cir/retrieval/retrieval.hpp"

#include <algorithm>
#include <numeric>

#include "cir/core/errors.hpp"
#include "cir/core/parallel.hpp"
#include "cir/curation/curate.hpp"
#include "cir/similarity/similarity.hpp"

namespace cir {

namespace {

constexpr std::array<std::string_view, 7> kModeNames = {
    "fused",
    "vlm_only",
    "text_only_generated",
    "baseline_image_only",
    "baseline_text_only",
    "baseline_image_plus_text",
    "baseline_target_text",
};

FeatureMatrix mean_tokens(const FeatureMatrix& a, const FeatureMatrix& b) {
  FeatureMatrix out(a.rows(), a.dim());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.dim(); ++c) {
      out(r, c) = 0.5f * (a(r, c) + b(r, c));
    }
  }
  return out;
}

}  // namespace

std::string_view mode_name(RetrievalMode mode) {
  return kModeNames[static_cast<std::size_t>(mode)];
}

RetrievalMode parse_mode(std::string_view name) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == name) return static_cast<RetrievalMode>(i);
  }
  throw ValidationError("unknown retrieval mode '" + std::string(name) + "'");
}

bool needs_target_text(RetrievalMode mode) {
  return mode == RetrievalMode::kFused ||
         mode == RetrievalMode::kTextOnlyGenerated ||
         mode == RetrievalMode::kBaselineTargetText;
}

void QueryBundle::validate(RetrievalMode mode) const {
  if (modification.empty()) {
    throw ValidationError("query '" + query_id + "': empty modification");
  }
  if (needs_target_text(mode) &&
      (!generated_target_text || generated_target_text->empty())) {
    throw ValidationError("query '" + query_id + "': mode " +
                          std::string(mode_name(mode)) +
                          " needs a generated target text");
  }
  reference.tokens.validate("query '" + query_id + "' reference tokens");
}

RankedList rank_scores(const std::vector<std::string>& ids,
                       const std::vector<double>& scores, std::size_t topk) {
  if (topk == 0) throw ValidationError("retrieve: topk must be >= 1");
  if (ids.size() != scores.size()) {
    throw ValidationError("retrieve: score count does not match candidates");
  }
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  const std::size_t n = std::min(topk, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(n),
                    order.end(), better);
  RankedList out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({ids[order[i]], scores[order[i]]});
  }
  return out;
}

Retriever::Retriever(const Index& index, const EncoderParams& params,
                     const EncoderParams* baseline, std::size_t threads)
    : index_(index), params_(params), baseline_(baseline) {
  index_.validate();
  if (!(index_.config == params_.config)) {
    throw ValidationError(
        "retriever: index was built for a different encoder configuration");
  }
  if (baseline_ != nullptr) {
    baseline_features_.assign(index_.size(), FeatureMatrix());
    parallel_for(index_.size(), threads, [&](std::size_t i) {
      baseline_features_[i] = encode_image(index_.raw[i].tokens, *baseline_);
    });
  }
}

std::vector<double> Retriever::score_against(
    const FeatureMatrix& query, const std::vector<FeatureMatrix>& cands) const {
  const Mat s = similarity_matrix(std::span(&query, 1), cands);
  return std::vector<double>(s.data(), s.data() + s.size());
}

std::vector<double> Retriever::score(const QueryBundle& bundle,
                                     RetrievalMode mode) const {
  bundle.validate(mode);
  const auto vocab = params_.config.vocab;
  const auto& cands = index_.features;
  switch (mode) {
    case RetrievalMode::kFused: {
      auto s_hat = score(bundle, RetrievalMode::kVlmOnly);
      const auto s_tilde = score(bundle, RetrievalMode::kTextOnlyGenerated);
      for (std::size_t j = 0; j < s_hat.size(); ++j) {
        s_hat[j] = fuse(s_hat[j], s_tilde[j]);
      }
      return s_hat;
    }
    case RetrievalMode::kVlmOnly:
      return score_against(
          encode_composed(bundle.reference.tokens,
                          tokenize(bundle.modification, vocab), params_),
          cands);
    case RetrievalMode::kTextOnlyGenerated:
      return score_against(
          encode_text(tokenize(*bundle.generated_target_text, vocab), params_),
          cands);
    case RetrievalMode::kBaselineImageOnly:
      return score_against(encode_image(bundle.reference.tokens, params_),
                           cands);
    case RetrievalMode::kBaselineTextOnly:
      return score_against(
          encode_text(tokenize(bundle.modification, vocab), params_), cands);
    case RetrievalMode::kBaselineImagePlusText:
      return score_against(
          mean_tokens(
              encode_image(bundle.reference.tokens, params_),
              encode_text(tokenize(bundle.modification, vocab), params_)),
          cands);
    case RetrievalMode::kBaselineTargetText: {
      if (baseline_ == nullptr) {
        return score(bundle, RetrievalMode::kTextOnlyGenerated);
      }
      return score_against(
          encode_text(tokenize(*bundle.generated_target_text,
                               baseline_->config.vocab),
                      *baseline_),
          baseline_features_);
    }
  }
  throw ValidationError("unknown retrieval mode");
}

RankedList Retriever::retrieve(const QueryBundle& bundle, RetrievalMode mode,
                               std::size_t topk) const {
  if (topk == 0) throw ValidationError("retrieve: topk must be >= 1");
  return rank_scores(index_.ids, score(bundle, mode), topk);
}

std::vector<double> score_query(const QueryBundle& bundle, const Index& index,
                                RetrievalMode mode,
                                const EncoderParams& params) {
  return Retriever(index, params).score(bundle, mode);
}

RankedList retrieve(const QueryBundle& bundle, const Index& index,
                    RetrievalMode mode, const EncoderParams& params,
                    std::size_t topk) {
  return Retriever(index, params).retrieve(bundle, mode, topk);
}

const std::string& generate_query_target_text(QueryBundle& bundle,
                                              const TextGenerator& gen,
                                              const PromptSet& prompts) {
  bundle.generated_target_text = generate_target_text(
      bundle.reference, bundle.modification, gen, prompts);
  return *bundle.generated_target_text;
}

QueryBundle bundle_for_case(const EvalCase& c, const ImageLookup& corpus) {
  return QueryBundle{c.query_id, corpus.at(c.ref_id), c.modification,
                     std::nullopt};
}

}  // namespace cir
