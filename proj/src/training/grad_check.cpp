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

#include "cir/training/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cir/core/errors.hpp"
#include "cir/core/rng.hpp"

namespace cir {

double relative_error(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

struct Slot {
  std::string name;
  Mat* value;
  const Mat* grad;
  std::vector<std::size_t> rows;  // eligible rows; empty means all
};

}  // namespace

GradCheckReport grad_check(const EncoderParams& params,
                           std::span<const TripletItem> triplets,
                           std::span<const CaptionItem> captions,
                           const GradCheckOptions& options) {
  if (!(options.eps >= 1e-5 && options.eps <= 1e-3)) {
    throw ValidationError("grad_check: eps must lie in [1e-5, 1e-3]");
  }
  if (options.samples == 0) {
    throw ValidationError("grad_check: samples must be >= 1");
  }
  EncoderParams work = params;
  EncoderParams grads = zeros_like(params);
  batch_loss(triplets, captions, work, options.temperature, options.weights,
             &grads);

  std::set<std::size_t> used_tokens;
  for (const auto& t : triplets) {
    used_tokens.insert(t.modification.ids.begin(), t.modification.ids.end());
    used_tokens.insert(t.target.ids.begin(), t.target.ids.end());
  }
  for (const auto& c : captions) {
    used_tokens.insert(c.caption.ids.begin(), c.caption.ids.end());
  }

  std::vector<Slot> slots;
  std::vector<const Mat*> grad_list;
  grads.for_each(
      [&](const std::string&, const Mat& g) { grad_list.push_back(&g); });
  std::size_t i = 0;
  work.for_each([&](const std::string& name, Mat& value) {
    const Mat* g = grad_list[i++];
    if (value.size() == 0) return;
    Slot slot{name, &value, g, {}};
    if (name == "text_embed") {
      slot.rows.assign(used_tokens.begin(), used_tokens.end());
    }
    slots.push_back(std::move(slot));
  });

  const auto loss_at = [&] {
    const double l =
        batch_loss(triplets, captions, work, options.temperature,
                   options.weights)
            .total;
    if (!std::isfinite(l)) {
      throw DivergenceError("grad_check: non-finite loss at perturbed point");
    }
    return l;
  };

  Rng rng(mix_seed(options.seed, 0x6C4E));
  GradCheckReport report;
  for (std::size_t s = 0; s < options.samples; ++s) {
    const Slot& slot = slots[rng.below(slots.size())];
    Mat& w = *slot.value;
    const std::size_t row =
        slot.rows.empty() ? rng.below(w.rows())
                          : slot.rows[rng.below(slot.rows.size())];
    const std::size_t col = rng.below(w.cols());
    const double saved = w(row, col);
    w(row, col) = saved + options.eps;
    const double plus = loss_at();
    w(row, col) = saved - options.eps;
    const double minus = loss_at();
    w(row, col) = saved;

    GradCheckSample sample{slot.name, row, col, (*slot.grad)(row, col),
                           (plus - minus) / (2.0 * options.eps), 0.0};
    sample.rel_error = relative_error(sample.analytic, sample.numeric);
    report.max_rel_error = std::max(report.max_rel_error, sample.rel_error);
    report.samples.push_back(std::move(sample));
  }
  return report;
}

}  // namespace cir
