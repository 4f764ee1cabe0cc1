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

#include "cir/encoder/encoder.hpp"

namespace cir {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Decoupled-weight-decay Adam. Moments live in tensors shaped like the
// parameters they track.
class AdamW {
 public:
  AdamW(const EncoderParams& params, AdamWOptions options);

  // One update with learning rate `lr`:
  //   p <- p - lr * wd * p
  //   m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
  //   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
  // Parameters are rounded to float afterwards so persisted checkpoints are
  // exact.
  void step(EncoderParams& params, const EncoderParams& grads, double lr);

  std::uint64_t steps() const { return steps_; }

 private:
  AdamWOptions options_;
  EncoderParams m_;
  EncoderParams v_;
  std::uint64_t steps_ = 0;
};

}  // namespace cir
