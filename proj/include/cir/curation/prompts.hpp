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
#include <string_view>

namespace cir {

enum class PromptRole { kModification, kTargetText, kCaption };

std::string_view role_name(PromptRole role);

inline constexpr std::string_view kModificationPlaceholder =
    "{modification_text}";

struct PromptTemplate {
  PromptRole role;
  std::string body;

  // Only the target_text template carries the placeholder.
  void validate() const;
  // Replaces every placeholder occurrence with `modification` verbatim.
  std::string render(std::string_view modification = {}) const;

  bool operator==(const PromptTemplate&) const = default;
};

struct PromptSet {
  PromptTemplate modification;
  PromptTemplate target_text;
  PromptTemplate caption;

  const PromptTemplate& get(PromptRole role) const;
  void validate() const;
  bool operator==(const PromptSet&) const = default;
};

// The shipped curation prompts and the alternate set used for the
// prompt-engineering ablation.
PromptSet default_prompts();
PromptSet alternate_prompts();

// Reads modification.txt, target_text.txt and caption.txt from `dir`;
// trailing whitespace is trimmed.
PromptSet load_prompt_dir(const std::string& dir);

}  // namespace cir
