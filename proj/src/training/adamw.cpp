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

#include "cir/training/adamw.hpp"

#include <cmath>
#include <vector>

#include "cir/core/errors.hpp"

namespace cir {

AdamW::AdamW(const EncoderParams& params, AdamWOptions options)
    : options_(options), m_(zeros_like(params)), v_(zeros_like(params)) {}

void AdamW::step(EncoderParams& params, const EncoderParams& grads,
                 double lr) {
  if (!(params.config == grads.config)) {
    throw ValidationError("adamw: gradient shape mismatch");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(options_.beta1, t);
  const double bc2 = 1.0 - std::pow(options_.beta2, t);

  std::vector<const Mat*> g;
  grads.for_each([&](const std::string&, const Mat& x) { g.push_back(&x); });
  std::vector<Mat*> m, v;
  m_.for_each([&](const std::string&, Mat& x) { m.push_back(&x); });
  v_.for_each([&](const std::string&, Mat& x) { v.push_back(&x); });

  std::size_t i = 0;
  params.for_each([&](const std::string&, Mat& p) {
    const Mat& gi = *g[i];
    Mat& mi = *m[i];
    Mat& vi = *v[i];
    ++i;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double grad = gi.data()[j];
      double& mj = mi.data()[j];
      double& vj = vi.data()[j];
      double& pj = p.data()[j];
      pj -= lr * options_.weight_decay * pj;
      mj = options_.beta1 * mj + (1.0 - options_.beta1) * grad;
      vj = options_.beta2 * vj + (1.0 - options_.beta2) * grad * grad;
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      pj -= lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  });
  round_to_float(params);
}

}  // namespace cir
