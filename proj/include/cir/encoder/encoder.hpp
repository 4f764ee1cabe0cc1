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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cir/core/feature_matrix.hpp"
#include "cir/encoder/tape.hpp"
#include "cir/encoder/tokenizer.hpp"

namespace cir {

struct EncoderConfig {
  std::uint32_t k = 8;          // shared query tokens = output tokens
  std::uint32_t d = 64;         // model dimension
  std::uint32_t blocks = 2;
  std::uint32_t heads = 4;      // must divide d
  std::uint32_t vocab = 4096;   // hashed vocabulary size
  std::uint32_t image_dim = 16; // input image-token width; projected when != d
  std::uint32_t max_text_len = 64;  // longer texts are truncated

  bool projects_image() const { return image_dim != d; }
  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

struct EncoderBlock {
  Mat ln1_gain, ln1_shift;
  Mat self_wq, self_wk, self_wv, self_wo;
  Mat ln2_gain, ln2_shift;
  Mat cross_wq, cross_wk, cross_wv, cross_wo;
  Mat ln3_gain, ln3_shift;
  Mat mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

// Every trainable tensor. The same structure doubles as the gradient
// container (see zeros_like).
struct EncoderParams {
  EncoderConfig config;
  Mat query_tokens;  // k x d
  Mat text_embed;    // vocab x d
  Mat text_pos;      // max_text_len x d
  Mat image_proj;    // image_dim x d, or 0 x 0 when no projection
  std::vector<EncoderBlock> blocks;
  Mat final_gain, final_shift;

  // Visits (name, tensor) in the canonical checkpoint order.
  void for_each(const std::function<void(const std::string&, Mat&)>& fn);
  void for_each(
      const std::function<void(const std::string&, const Mat&)>& fn) const;

  std::size_t parameter_count() const;
  // Throws ValidationError on non-finite entries or shapes that disagree
  // with `config`.
  void validate() const;
  bool operator==(const EncoderParams& other) const;
};

// Allocates every tensor at its configured shape, filled with zeros.
EncoderParams zeros_like(const EncoderConfig& config);
EncoderParams zeros_like(const EncoderParams& params);

// N(0, 0.02^2) for weights, embeddings and query tokens; gains 1, shifts and
// biases 0. Values are rounded to float so checkpoints round-trip exactly.
EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed);

inline constexpr double kInitStd = 0.02;

// Every entry drawn densely: gains 1 + N(0, scale^2), all other tensors
// N(0, scale^2). At kInitStd many gradients sit near the finite-difference
// noise floor, so gradient checks run on draws like these.
EncoderParams random_params(const EncoderConfig& config, std::uint64_t seed,
                            double scale = 0.1);

// Rounds every parameter to the nearest float.
void round_to_float(EncoderParams& params);

// Builds encoder computations on a tape. Parameters are bound once, so many
// items can share one graph; when `grads` is given (shaped like `params`)
// backward() accumulates into it.
class EncoderGraph {
 public:
  EncoderGraph(Tape& tape, const EncoderParams& params,
               EncoderParams* grads = nullptr);

  // k x d output tokens for a (reference image, modification) query.
  Var composed(const FeatureMatrix& image, const TokenSequence& text);
  // Text alone: the cross-attention sublayer is skipped.
  Var text(const TokenSequence& text);
  // Image alone: self-attention runs over the query tokens only.
  Var image(const FeatureMatrix& image);

  Tape& tape() { return tape_; }

 private:
  struct BlockVars {
    Var ln1_gain, ln1_shift, self_wq, self_wk, self_wv, self_wo;
    Var ln2_gain, ln2_shift, cross_wq, cross_wk, cross_wv, cross_wo;
    Var ln3_gain, ln3_shift, mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  };

  Var forward(const FeatureMatrix* image, const TokenSequence* text);
  Var embed_text(const TokenSequence& text);
  Var project_image(const FeatureMatrix& image);

  Tape& tape_;
  const EncoderParams& params_;
  Var query_tokens_, text_embed_, text_pos_, image_proj_;
  std::vector<BlockVars> blocks_;
  Var final_gain_, final_shift_;
};

// Inference entry points; each returns k x d features.
FeatureMatrix encode_composed(const FeatureMatrix& image,
                              const TokenSequence& text,
                              const EncoderParams& params);
FeatureMatrix encode_text(const TokenSequence& text,
                          const EncoderParams& params);
FeatureMatrix encode_image(const FeatureMatrix& image,
                           const EncoderParams& params);

FeatureMatrix to_feature_matrix(const Mat& m);
Mat to_mat(const FeatureMatrix& f);

}  // namespace cir
