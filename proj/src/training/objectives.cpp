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

#include "cir/training/objectives.hpp"

#include "cir/core/errors.hpp"

namespace cir {

double info_nce(const Mat& sim, double tau) {
  if (!sim.allFinite()) throw ValidationError("info_nce: non-finite similarity");
  Tape tape(false);
  return tape.scalar(tape.info_nce(tape.constant(sim), tau));
}

TrainingSet build_training_set(const std::vector<ImageRecord>& images,
                               const std::vector<TripletRecord>& triplets,
                               const std::vector<CaptionRecord>& captions,
                               const EncoderConfig& config) {
  const ImageLookup lookup(images);
  validate_triplets(triplets, lookup);
  validate_captions(captions, lookup);
  TrainingSet set;
  set.triplets.reserve(triplets.size());
  for (const auto& t : triplets) {
    set.triplets.push_back({&lookup.at(t.ref_id),
                            tokenize(t.modification, config.vocab),
                            tokenize(t.target_text, config.vocab)});
  }
  set.captions.reserve(captions.size());
  for (const auto& c : captions) {
    set.captions.push_back(
        {&lookup.at(c.image_id), tokenize(c.caption, config.vocab)});
  }
  return set;
}

LossParts batch_loss(std::span<const TripletItem> triplets,
                     std::span<const CaptionItem> captions,
                     const EncoderParams& params, double tau,
                     const LossWeights& weights, EncoderParams* grads) {
  const bool use_t = weights.target_text != 0.0;
  const bool use_c = weights.caption != 0.0;
  if (!use_t && !use_c) throw ValidationError("batch_loss: both weights are 0");
  if (use_t && triplets.size() < 2) {
    throw ValidationError("batch_loss: triplet batch needs >= 2 items");
  }
  if (use_c && captions.size() < 2) {
    throw ValidationError("batch_loss: caption batch needs >= 2 items");
  }

  Tape tape(grads != nullptr);
  EncoderGraph graph(tape, params, grads);
  LossParts parts;
  Var total;

  if (use_t) {
    std::vector<Var> queries, targets;
    queries.reserve(triplets.size());
    targets.reserve(triplets.size());
    for (const auto& t : triplets) {
      queries.push_back(graph.composed(t.image->tokens, t.modification));
      targets.push_back(graph.text(t.target));
    }
    Var loss = tape.info_nce(tape.maxsim_matrix(queries, targets), tau);
    parts.loss_t = tape.scalar(loss);
    total = tape.scale(loss, weights.target_text);
  }
  if (use_c) {
    std::vector<Var> texts, images;
    texts.reserve(captions.size());
    images.reserve(captions.size());
    for (const auto& c : captions) {
      texts.push_back(graph.text(c.caption));
      images.push_back(graph.image(c.image->tokens));
    }
    Var loss = tape.info_nce(tape.maxsim_matrix(texts, images), tau);
    parts.loss_c = tape.scalar(loss);
    Var weighted = tape.scale(loss, weights.caption);
    total = total.valid() ? tape.add(total, weighted) : weighted;
  }
  parts.total = tape.scalar(total);
  if (grads) tape.backward(total);
  return parts;
}

}  // namespace cir
