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

#include "cir/curation/curate.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <optional>
#include <thread>

namespace cir {

namespace {

std::string strip(std::string s) {
  constexpr const char* kSpace = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

std::string dispatch(const ImageRecord& image, PromptRole role,
                     const PromptTemplate& tmpl,
                     std::optional<std::string> modification,
                     const TextGenerator& gen) {
  GenerationRequest req{image, role,
                        tmpl.render(modification ? *modification : ""),
                        std::move(modification)};
  std::string text;
  try {
    text = strip(gen.generate(req));
  } catch (const GenerationError&) {
    throw;
  } catch (const Error& e) {
    throw GenerationError(GenerationError::Kind::kGenerator, image.id,
                          e.what());
  }
  if (text.empty()) {
    throw GenerationError(GenerationError::Kind::kEmpty, image.id,
                          std::string(role_name(role)) +
                              " generation returned empty text");
  }
  return text;
}

}  // namespace

std::string generate_modification(const ImageRecord& image,
                                  const TextGenerator& gen,
                                  const PromptSet& prompts) {
  return dispatch(image, PromptRole::kModification, prompts.modification,
                  std::nullopt, gen);
}

std::string generate_target_text(const ImageRecord& image,
                                 const std::string& modification,
                                 const TextGenerator& gen,
                                 const PromptSet& prompts) {
  if (modification.empty()) {
    throw ValidationError("target text generation for '" + image.id +
                          "' needs a nonempty modification");
  }
  return dispatch(image, PromptRole::kTargetText, prompts.target_text,
                  modification, gen);
}

std::string generate_caption(const ImageRecord& image,
                             const TextGenerator& gen,
                             const PromptSet& prompts) {
  return dispatch(image, PromptRole::kCaption, prompts.caption, std::nullopt,
                  gen);
}

CurationResult curate_dataset(const std::vector<ImageRecord>& images,
                              const TextGenerator& gen,
                              const CurationOptions& options) {
  if (images.empty()) throw ValidationError("curate: no images given");
  options.prompts.validate();

  struct Slot {
    std::optional<TripletRecord> triplet;
    std::optional<CaptionRecord> caption;
    std::optional<CurationFailure> failure;
  };
  std::vector<Slot> slots(images.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex error_mu;
  std::optional<GenerationError> first_error;

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= images.size()) return;
      const auto& img = images[i];
      try {
        auto mod = generate_modification(img, gen, options.prompts);
        auto target = generate_target_text(img, mod, gen, options.prompts);
        auto caption = generate_caption(img, gen, options.prompts);
        slots[i].triplet = TripletRecord{img.id, std::move(mod),
                                         std::move(target)};
        slots[i].caption = CaptionRecord{img.id, std::move(caption)};
      } catch (const GenerationError& e) {
        if (options.strict) {
          std::lock_guard lock(error_mu);
          if (!first_error) first_error = e;
          abort.store(true);
          return;
        }
        slots[i].failure = CurationFailure{img.id, e.what()};
      }
    }
  };

  const std::size_t nthreads =
      std::clamp<std::size_t>(options.parallelism, 1, images.size());
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  }
  if (first_error) throw *first_error;

  CurationResult result;
  for (auto& s : slots) {
    if (s.triplet) result.triplets.push_back(std::move(*s.triplet));
    if (s.caption) result.captions.push_back(std::move(*s.caption));
    if (s.failure) result.failures.push_back(std::move(*s.failure));
  }
  return result;
}

}  // namespace cir
