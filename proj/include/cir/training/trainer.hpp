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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cir/encoder/encoder.hpp"
#include "cir/training/adamw.hpp"
#include "cir/training/objectives.hpp"

namespace cir {

// Reference fine-tuning settings: AdamW, lr 1e-5 decayed x0.1 every 10
// epochs, batch 128.
inline constexpr double kReferenceLearningRate = 1e-5;
inline constexpr std::size_t kReferenceBatchSize = 128;

struct TrainConfig {
  double temperature = 0.07;
  double lr = 1e-3;  // desk-scale default; see kReferenceLearningRate
  double lr_decay = 0.1;
  std::uint32_t decay_epochs = 10;
  std::size_t batch_size = 32;
  std::uint32_t epochs = 30;
  std::uint64_t seed = 0;
  AdamWOptions adamw;
  LossWeights weights;

  void validate() const;
  // Learning rate used throughout `epoch` (1-based):
  //   lr * lr_decay^floor((epoch - 1) / decay_epochs)
  double lr_at_epoch(std::uint32_t epoch) const;
};

nlohmann::json train_config_to_json(const TrainConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j,
                                   TrainConfig base = {});

struct EpochStats {
  std::uint32_t epoch = 0;
  double lr = 0.0;
  double loss_t = 0.0;
  double loss_c = 0.0;
  double loss_total = 0.0;
};

struct LossTrace {
  // Mean losses of the first epoch's batches evaluated at the initial
  // parameters, before any update.
  LossParts initial;
  std::vector<EpochStats> epochs;

  // "epoch,loss_t,loss_c,loss_total" plus one row per epoch.
  std::string to_csv() const;
};

struct TrainResult {
  EncoderParams params;
  LossTrace trace;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Shuffled mini-batch AdamW training with a stepped learning-rate schedule.
// Triplet and caption batches are drawn from independent shuffles; each
// epoch runs min(|triplets|, |captions|) / batch_size steps. Deterministic
// for a fixed seed. Throws ValidationError when there are fewer than
// batch_size triplets or captions and DivergenceError on a non-finite loss.
TrainResult train(const TrainingSet& data, const EncoderConfig& encoder,
                  const TrainConfig& config,
                  std::optional<EncoderParams> init = std::nullopt,
                  const EpochCallback& on_epoch = {});

}  // namespace cir
