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
#include <span>
#include <string>
#include <vector>

#include "cir/encoder/encoder.hpp"
#include "cir/training/objectives.hpp"

namespace cir {

struct GradCheckOptions {
  double eps = 1e-4;           // central-difference step, in [1e-5, 1e-3]
  std::size_t samples = 50;    // coordinates compared
  std::uint64_t seed = 0;      // coordinate sampling
  double temperature = 0.07;
  LossWeights weights;
};

struct GradCheckSample {
  std::string tensor;
  std::size_t row = 0;
  std::size_t col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<GradCheckSample> samples;
};

// Compares analytic batch_loss gradients with central differences
//   (L(w + eps) - L(w - eps)) / (2 eps)
// at sampled coordinates; relative error uses max(|a|, |n|, 1e-8) as the
// denominator. A tensor is chosen uniformly, then a coordinate within it;
// for the text embedding only rows of tokens present in the batch are
// eligible. Throws DivergenceError on a non-finite perturbed loss.
GradCheckReport grad_check(const EncoderParams& params,
                           std::span<const TripletItem> triplets,
                           std::span<const CaptionItem> captions,
                           const GradCheckOptions& options = {});

// Relative error of a single comparison.
double relative_error(double analytic, double numeric);

}  // namespace cir
