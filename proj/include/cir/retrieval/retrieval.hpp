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

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cir/curation/generator.hpp"
#include "cir/curation/prompts.hpp"
#include "cir/retrieval/index.hpp"

namespace cir {

enum class RetrievalMode {
  kFused,
  kVlmOnly,
  kTextOnlyGenerated,
  kBaselineImageOnly,
  kBaselineTextOnly,
  kBaselineImagePlusText,
  kBaselineTargetText,
};

inline constexpr std::array<RetrievalMode, 7> kAllModes = {
    RetrievalMode::kFused,
    RetrievalMode::kVlmOnly,
    RetrievalMode::kTextOnlyGenerated,
    RetrievalMode::kBaselineImageOnly,
    RetrievalMode::kBaselineTextOnly,
    RetrievalMode::kBaselineImagePlusText,
    RetrievalMode::kBaselineTargetText,
};

// "fused", "vlm_only", "text_only_generated", "baseline_image_only", ...
std::string_view mode_name(RetrievalMode mode);
RetrievalMode parse_mode(std::string_view name);
// Whether the mode scores with the generated target text.
bool needs_target_text(RetrievalMode mode);

// A composed query: reference image, modification text and, once
// generated, the imagined target description.
struct QueryBundle {
  std::string query_id;
  ImageRecord reference;
  std::string modification;
  std::optional<std::string> generated_target_text;

  // Throws ValidationError when the bundle cannot be scored under `mode`.
  void validate(RetrievalMode mode) const;
};

struct RankedEntry {
  std::string id;
  double score = 0.0;
  bool operator==(const RankedEntry&) const = default;
};
using RankedList = std::vector<RankedEntry>;

// Descending score, ties by ascending id, truncated to topk (>= 1).
RankedList rank_scores(const std::vector<std::string>& ids,
                       const std::vector<double>& scores, std::size_t topk);

// Scores queries against an immutable index. `baseline`, when given, is a
// separate frozen encoder used only by baseline_target_text; candidates are
// then re-encoded with it from the raw tokens. Safe for concurrent use.
class Retriever {
 public:
  Retriever(const Index& index, const EncoderParams& params,
            const EncoderParams* baseline = nullptr, std::size_t threads = 1);

  // One score per candidate, in index order:
  //   fused                    (s_hat + s_tilde) / 2
  //   vlm_only                 s_hat = maxsim(composed(ref, mod), cand)
  //   text_only_generated      s_tilde = maxsim(text(t_q), cand)
  //   baseline_image_only      maxsim(image(ref), cand)
  //   baseline_text_only       maxsim(text(mod), cand)
  //   baseline_image_plus_text maxsim((image(ref) + text(mod)) / 2, cand)
  //   baseline_target_text     s_tilde under the baseline encoder
  std::vector<double> score(const QueryBundle& bundle,
                            RetrievalMode mode) const;

  RankedList retrieve(const QueryBundle& bundle, RetrievalMode mode,
                      std::size_t topk) const;

  const Index& index() const { return index_; }

 private:
  std::vector<double> score_against(const FeatureMatrix& query,
                                    const std::vector<FeatureMatrix>& cands) const;

  const Index& index_;
  const EncoderParams& params_;
  const EncoderParams* baseline_;
  std::vector<FeatureMatrix> baseline_features_;
};

std::vector<double> score_query(const QueryBundle& bundle, const Index& index,
                                RetrievalMode mode,
                                const EncoderParams& params);
RankedList retrieve(const QueryBundle& bundle, const Index& index,
                    RetrievalMode mode, const EncoderParams& params,
                    std::size_t topk);

// Fills bundle.generated_target_text using the target-text template, the
// same one used to curate training data.
const std::string& generate_query_target_text(
    QueryBundle& bundle, const TextGenerator& gen,
    const PromptSet& prompts = default_prompts());

// Builds a bundle for an evaluation case.
QueryBundle bundle_for_case(const EvalCase& c, const ImageLookup& corpus);

}  // namespace cir
