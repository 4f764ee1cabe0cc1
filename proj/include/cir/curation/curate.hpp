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

#include <string>
#include <vector>

#include "cir/corpus/records.hpp"
#include "cir/curation/generator.hpp"
#include "cir/curation/prompts.hpp"

namespace cir {

// Each call renders the matching template, strips whitespace from the reply
// and rejects empty text. Failures surface as GenerationError carrying the
// image id.
std::string generate_modification(const ImageRecord& image,
                                  const TextGenerator& gen,
                                  const PromptSet& prompts = default_prompts());
std::string generate_target_text(const ImageRecord& image,
                                 const std::string& modification,
                                 const TextGenerator& gen,
                                 const PromptSet& prompts = default_prompts());
std::string generate_caption(const ImageRecord& image,
                             const TextGenerator& gen,
                             const PromptSet& prompts = default_prompts());

struct CurationFailure {
  std::string image_id;
  std::string message;
};

struct CurationOptions {
  PromptSet prompts = default_prompts();
  // Abort on the first failure instead of collecting it.
  bool strict = false;
  std::size_t parallelism = 1;
};

struct CurationResult {
  std::vector<TripletRecord> triplets;
  std::vector<CaptionRecord> captions;
  std::vector<CurationFailure> failures;
};

// One triplet and one caption per image, in input order. In lenient mode an
// image whose generation fails contributes neither record and is listed in
// `failures`.
CurationResult curate_dataset(const std::vector<ImageRecord>& images,
                              const TextGenerator& gen,
                              const CurationOptions& options = {});

}  // namespace cir
