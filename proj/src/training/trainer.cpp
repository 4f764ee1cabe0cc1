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

#include "cir/training/trainer.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "cir/core/errors.hpp"
#include "cir/core/rng.hpp"

namespace cir {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(temperature > 0.0)) throw ValidationError("train: temperature must be > 0");
  if (!(lr > 0.0)) throw ValidationError("train: lr must be > 0");
  if (!(lr_decay > 0.0)) throw ValidationError("train: lr_decay must be > 0");
  if (decay_epochs < 1) throw ValidationError("train: decay_epochs must be >= 1");
  if (batch_size < 2) {
    throw ValidationError("train: batch_size must be >= 2 for in-batch negatives");
  }
  if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
  if (weights.target_text < 0.0 || weights.caption < 0.0 ||
      (weights.target_text == 0.0 && weights.caption == 0.0)) {
    throw ValidationError("train: loss weights must be >= 0 and not both 0");
  }
}

double TrainConfig::lr_at_epoch(std::uint32_t epoch) const {
  if (epoch < 1) throw ValidationError("lr_at_epoch: epochs are 1-based");
  const auto drops = (epoch - 1) / decay_epochs;
  return lr * std::pow(lr_decay, static_cast<double>(drops));
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"temperature", c.temperature},
              {"lr", c.lr},
              {"lr_decay", c.lr_decay},
              {"decay_epochs", c.decay_epochs},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"beta1", c.adamw.beta1},
              {"beta2", c.adamw.beta2},
              {"eps", c.adamw.eps},
              {"weight_decay", c.adamw.weight_decay},
              {"loss_t_weight", c.weights.target_text},
              {"loss_c_weight", c.weights.caption}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  static const std::set<std::string> kKeys = {
      "temperature", "lr",    "lr_decay", "decay_epochs", "batch_size",
      "epochs",      "seed",  "beta1",    "beta2",        "eps",
      "weight_decay", "loss_t_weight", "loss_c_weight"};
  if (!j.is_object()) throw ValidationError("train config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.contains(key)) {
      throw ValidationError("train config: unknown key '" + key + "'");
    }
  }
  try {
    c.temperature = j.value("temperature", c.temperature);
    c.lr = j.value("lr", c.lr);
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.decay_epochs = j.value("decay_epochs", c.decay_epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.adamw.beta1 = j.value("beta1", c.adamw.beta1);
    c.adamw.beta2 = j.value("beta2", c.adamw.beta2);
    c.adamw.eps = j.value("eps", c.adamw.eps);
    c.adamw.weight_decay = j.value("weight_decay", c.adamw.weight_decay);
    c.weights.target_text = j.value("loss_t_weight", c.weights.target_text);
    c.weights.caption = j.value("loss_c_weight", c.weights.caption);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string LossTrace::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss_t,loss_c,loss_total\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.loss_t << ',' << e.loss_c << ','
        << e.loss_total << '\n';
  }
  return out.str();
}

namespace {

template <typename T>
std::vector<T> gather(const std::vector<T>& items,
                      std::span<const std::size_t> order) {
  std::vector<T> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(items[i]);
  return out;
}

void check_finite(const LossParts& parts, std::uint32_t epoch,
                  std::size_t step) {
  if (!std::isfinite(parts.total) || !std::isfinite(parts.loss_t) ||
      !std::isfinite(parts.loss_c)) {
    std::ostringstream msg;
    msg << "training diverged at epoch " << epoch << ", step " << step
        << ": loss_t=" << parts.loss_t << " loss_c=" << parts.loss_c
        << " total=" << parts.total;
    throw DivergenceError(msg.str());
  }
}

}  // namespace

TrainResult train(const TrainingSet& data, const EncoderConfig& encoder,
                  const TrainConfig& config, std::optional<EncoderParams> init,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (data.triplets.size() < config.batch_size ||
      data.captions.size() < config.batch_size) {
    throw ValidationError("train: need at least batch_size (" +
                          std::to_string(config.batch_size) +
                          ") triplets and captions, have " +
                          std::to_string(data.triplets.size()) + " and " +
                          std::to_string(data.captions.size()));
  }
  TrainResult result{init ? std::move(*init) : init_params(encoder, config.seed),
                     {}};
  EncoderParams& params = result.params;
  if (!(params.config == encoder)) {
    throw ValidationError("train: initial params do not match encoder config");
  }

  Rng triplet_rng(mix_seed(config.seed, 0x7101));
  Rng caption_rng(mix_seed(config.seed, 0xCA97));
  std::vector<std::size_t> t_order(data.triplets.size());
  std::vector<std::size_t> c_order(data.captions.size());
  const std::size_t steps =
      std::min(data.triplets.size(), data.captions.size()) / config.batch_size;
  const std::size_t bs = config.batch_size;

  AdamW optimizer(params, config.adamw);
  EncoderParams grads = zeros_like(params);

  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(t_order.begin(), t_order.end(), 0);
    std::iota(c_order.begin(), c_order.end(), 0);
    triplet_rng.shuffle(std::span(t_order));
    caption_rng.shuffle(std::span(c_order));

    if (epoch == 1) {
      LossParts sum;
      for (std::size_t s = 0; s < steps; ++s) {
        const auto tb = gather(data.triplets,
                               std::span(t_order).subspan(s * bs, bs));
        const auto cb = gather(data.captions,
                               std::span(c_order).subspan(s * bs, bs));
        const auto parts = batch_loss(tb, cb, params, config.temperature,
                                      config.weights);
        check_finite(parts, 0, s);
        sum.loss_t += parts.loss_t;
        sum.loss_c += parts.loss_c;
        sum.total += parts.total;
      }
      const auto n = static_cast<double>(steps);
      result.trace.initial = {sum.loss_t / n, sum.loss_c / n, sum.total / n};
    }

    const double lr = config.lr_at_epoch(epoch);
    EpochStats stats{epoch, lr, 0.0, 0.0, 0.0};
    for (std::size_t s = 0; s < steps; ++s) {
      const auto tb =
          gather(data.triplets, std::span(t_order).subspan(s * bs, bs));
      const auto cb =
          gather(data.captions, std::span(c_order).subspan(s * bs, bs));
      grads.for_each([](const std::string&, Mat& g) { g.setZero(); });
      const auto parts = batch_loss(tb, cb, params, config.temperature,
                                    config.weights, &grads);
      check_finite(parts, epoch, s);
      optimizer.step(params, grads, lr);
      stats.loss_t += parts.loss_t;
      stats.loss_c += parts.loss_c;
      stats.loss_total += parts.total;
    }
    const auto n = static_cast<double>(steps);
    stats.loss_t /= n;
    stats.loss_c /= n;
    stats.loss_total /= n;
    result.trace.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

}  // namespace cir
