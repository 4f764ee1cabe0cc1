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

#include <optional>
#include <string>

#include "cir/core/errors.hpp"
#include "cir/corpus/records.hpp"
#include "cir/curation/prompts.hpp"

namespace cir {

// One call to the text generator. `prompt` is the rendered template body,
// so for target text it already embeds `modification`.
struct GenerationRequest {
  const ImageRecord& image;
  PromptRole role;
  std::string prompt;
  std::optional<std::string> modification;
};

// A generation failure tagged with the image that caused it.
class GenerationError : public Error {
 public:
  enum class Kind { kTransport, kDecode, kEmpty, kGenerator };

  GenerationError(Kind kind, std::string image_id, const std::string& message)
      : Error("image '" + image_id + "': " + message),
        kind_(kind),
        image_id_(std::move(image_id)) {}

  Kind kind() const { return kind_; }
  const std::string& image_id() const { return image_id_; }

 private:
  Kind kind_;
  std::string image_id_;
};

// Stand-in for the multimodal model: maps (image, prompt, optional
// modification) to text. Implementations either return text or throw;
// deterministic ones must be pure functions of the request. Implementations
// must tolerate concurrent generate() calls.
class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(const GenerationRequest& request) const = 0;
};

}  // namespace cir
