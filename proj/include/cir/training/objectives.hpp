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

#include <span>
#include <vector>

#include "cir/corpus/records.hpp"
#include "cir/encoder/encoder.hpp"

namespace cir {

// Contrastive loss over an N x N similarity matrix with positives on the
// diagonal: -(1/N) sum_i log softmax(sim[i, :] / tau)[i]. Needs N >= 2,
// tau > 0 and finite entries.
double info_nce(const Mat& sim, double tau);

// A triplet with its reference features resolved and texts tokenized.
struct TripletItem {
  const ImageRecord* image = nullptr;
  TokenSequence modification;
  TokenSequence target;
};

struct CaptionItem {
  const ImageRecord* image = nullptr;
  TokenSequence caption;
};

struct TrainingSet {
  std::vector<TripletItem> triplets;
  std::vector<CaptionItem> captions;
};

// Resolves ids against `images` (which must outlive the result) and
// tokenizes with the encoder vocabulary.
TrainingSet build_training_set(const std::vector<ImageRecord>& images,
                               const std::vector<TripletRecord>& triplets,
                               const std::vector<CaptionRecord>& captions,
                               const EncoderConfig& config);

struct LossWeights {
  double target_text = 1.0;  // weight of the composed-query -> target-text term
  double caption = 1.0;      // weight of the caption -> image term
};

struct LossParts {
  double loss_t = 0.0;
  double loss_c = 0.0;
  double total = 0.0;
};

// Both contrastive objectives on in-batch negatives:
//   loss_t over maxsim(composed(x_i, m_i), text(t_j))
//   loss_c over maxsim(text(c_i), image(x_j))
//   total  = w_t * loss_t + w_c * loss_c
// A term with weight 0 is not evaluated and reported as 0. When `grads` is
// given, d(total)/d(params) is added to it.
LossParts batch_loss(std::span<const TripletItem> triplets,
                     std::span<const CaptionItem> captions,
                     const EncoderParams& params, double tau,
                     const LossWeights& weights = {},
                     EncoderParams* grads = nullptr);

}  // namespace cir
