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
#include <vector>

#include "cir/corpus/synth.hpp"
#include "cir/curation/generator.hpp"

namespace cir {

// Offline generator for synthetic corpora. Reads attribute values from the
// image metadata instead of pixels:
//   modification -> "change the <family> to <value>", family and new value
//                   chosen by hash(seed, image id)
//   target_text  -> "a <v1> <v2> ..." for the post-modification signature
//   caption      -> "a <v1> <v2> ..." for the image's own signature
class TemplateGenerator : public TextGenerator {
 public:
  TemplateGenerator(std::vector<AttributeFamily> families, std::uint64_t seed);

  std::string generate(const GenerationRequest& request) const override;

  // Describes a signature given in family order.
  static std::string describe(const std::vector<std::string>& signature);

  // Applies "change the <family> to <value>" to a signature. Throws
  // ValidationError when the text is not a recognized modification.
  std::vector<std::string> apply_modification(
      std::vector<std::string> signature, const std::string& text) const;

 private:
  std::vector<AttributeFamily> families_;
  std::uint64_t seed_;
};

}  // namespace cir
