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

#include "cir/curation/prompts.hpp"

#include <filesystem>

#include "cir/core/binary_io.hpp"
#include "cir/core/errors.hpp"

namespace cir {

namespace {

constexpr const char* kDefaultModification = R"(# Task Description
You are an expert in understanding and modifying images of objects. Your task is to generate one concise modification text for the given image based on its content. The modification should focus specifically on the object's attributes, including but not limited to:
- Change the object's color, material, texture, or pattern.
- Adjust the object's shape, size, or structural design.
- Modify specific features of the object, such as handles, edges, or attachments.
- Add or remove design elements like patterns, decorations, or markings.
- Transform the object’s overall appearance (e.g., from modern to antique, or from sleek to rugged).
- Combine any of the above changes or introduce other creative adjustments to the object.

Provide the modification text in one clear and concise sentence without any explanation or additional context.)";

constexpr const char* kDefaultTargetText = R"(# Task Description
You are an expert in object image editing and visualization. Your task is to imagine how the object in the given image would look after being modified according to the description "{modification_text}". Write exactly one clear and concise sentence describing only the modified image, focusing on the most important object details, such as:
- The type and category of the object.
- The color, material, texture, and pattern of the object.
- Distinctive design features, shapes, and structural details.
- Any notable attributes that define the object's appearance.

Provide the description in one clear and complete sentence without referencing the original object, the modification process, or any comparisons.)";

constexpr const char* kDefaultCaption = R"(# Task Description
You are an expert in image analysis and description. Your job is to generate one precise and concise sentence that fully describes the content of the given image. Focus on the most important details, such as:
- The primary objects or elements in the image.
- The relationships, positions, or actions of these objects.
- The overall setting, background, or scene type.

Provide the modification text in one clear and concise sentence without any explanation or additional context.)";

constexpr const char* kAlternateModification = R"(# Task Description
You are an expert in understanding and modifying image content. Your job is to generate one concise modification text for the given image based on its content. The modification should focus on one or more of the following aspects:
- Replace or change the background (e.g., season, environment, or weather).
- Change the color, shape, size, quantity, or texture of objects.
- Adjust the position, angle, or arrangement of objects.
- Add new objects, details, or elements to the scene.
- Remove specific objects or parts of the background.
- Combine any of the above changes or introduce other creative adjustments.

Provide the modification text in one clear and concise sentence without any explanation or additional context.)";

constexpr const char* kAlternateTargetText = R"(# Task Description
You are an expert in image editing and visualization. Your task is to imagine the content of the image after it has been modified based on the description "{modification_text}". Write exactly one clear and concise sentence describing the modified image as if it were a new and independent image, focusing on the most important details, such as:
- The primary objects or elements in the modification image.
- The relationships, positions, or actions of these objects.
- The overall setting, background, or scene type.

Provide the description in one clear and complete sentence without referencing the original image, the modification process, or any comparisons.)";

constexpr const char* kAlternateCaption = R"(# Task Description
You are an expert in image analysis and description. Your job is to generate one precise and concise sentence that fully describes the content of the given image. Focus on the most important details, such as:
- The primary objects or elements in the image.
- The relationships, positions, or actions of these objects.
- The overall setting, background, or scene type.

Provide the modification text in one clear and concise sentence without any explanation or additional context.)";

}  // namespace

std::string_view role_name(PromptRole role) {
  switch (role) {
    case PromptRole::kModification:
      return "modification";
    case PromptRole::kTargetText:
      return "target_text";
    case PromptRole::kCaption:
      return "caption";
  }
  return "unknown";
}

void PromptTemplate::validate() const {
  const bool has_placeholder =
      body.find(kModificationPlaceholder) != std::string::npos;
  if (role == PromptRole::kTargetText && !has_placeholder) {
    throw ValidationError("target_text prompt must contain " +
                          std::string(kModificationPlaceholder));
  }
  if (role != PromptRole::kTargetText && has_placeholder) {
    throw ValidationError(std::string(role_name(role)) +
                          " prompt must not contain a placeholder");
  }
  if (body.empty()) {
    throw ValidationError(std::string(role_name(role)) + " prompt is empty");
  }
}

std::string PromptTemplate::render(std::string_view modification) const {
  std::string out = body;
  const std::string_view ph = kModificationPlaceholder;
  for (auto pos = out.find(ph); pos != std::string::npos;
       pos = out.find(ph, pos + modification.size())) {
    out.replace(pos, ph.size(), modification);
  }
  return out;
}

const PromptTemplate& PromptSet::get(PromptRole role) const {
  switch (role) {
    case PromptRole::kModification:
      return modification;
    case PromptRole::kTargetText:
      return target_text;
    case PromptRole::kCaption:
      return caption;
  }
  throw ValidationError("unknown prompt role");
}

void PromptSet::validate() const {
  modification.validate();
  target_text.validate();
  caption.validate();
}

PromptSet default_prompts() {
  return {{PromptRole::kModification, kDefaultModification},
          {PromptRole::kTargetText, kDefaultTargetText},
          {PromptRole::kCaption, kDefaultCaption}};
}

PromptSet alternate_prompts() {
  return {{PromptRole::kModification, kAlternateModification},
          {PromptRole::kTargetText, kAlternateTargetText},
          {PromptRole::kCaption, kAlternateCaption}};
}

PromptSet load_prompt_dir(const std::string& dir) {
  auto load = [&](PromptRole role) {
    const auto path =
        (std::filesystem::path(dir) / (std::string(role_name(role)) + ".txt"))
            .string();
    std::string body = read_file(path);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r' ||
                             body.back() == ' ' || body.back() == '\t')) {
      body.pop_back();
    }
    return PromptTemplate{role, std::move(body)};
  };
  PromptSet set{load(PromptRole::kModification), load(PromptRole::kTargetText),
                load(PromptRole::kCaption)};
  set.validate();
  return set;
}

}  // namespace cir
