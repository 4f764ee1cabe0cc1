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

#include "cir/curation/template_generator.hpp"

#include <algorithm>
#include <regex>

#include "cir/core/hash.hpp"
#include "cir/core/rng.hpp"

namespace cir {

TemplateGenerator::TemplateGenerator(std::vector<AttributeFamily> families,
                                     std::uint64_t seed)
    : families_(std::move(families)), seed_(seed) {
  if (families_.empty()) {
    throw ValidationError("template generator needs attribute families");
  }
}

std::string TemplateGenerator::describe(
    const std::vector<std::string>& signature) {
  std::string out = "a";
  for (const auto& v : signature) out += " " + v;
  return out;
}

std::vector<std::string> TemplateGenerator::apply_modification(
    std::vector<std::string> signature, const std::string& text) const {
  static const std::regex kPattern(R"(^\s*change the (\S+) to (\S+)\s*$)",
                                   std::regex::icase);
  std::smatch m;
  if (!std::regex_match(text, m, kPattern)) {
    throw ValidationError("unrecognized modification '" + text + "'");
  }
  const std::string family = m[1];
  const std::string value = m[2];
  for (std::size_t f = 0; f < families_.size(); ++f) {
    if (families_[f].name != family) continue;
    const auto& vals = families_[f].values;
    if (std::find(vals.begin(), vals.end(), value) == vals.end()) {
      throw ValidationError("value '" + value + "' is not in family '" +
                            family + "'");
    }
    signature.at(f) = value;
    return signature;
  }
  throw ValidationError("unknown attribute family '" + family + "'");
}

std::string TemplateGenerator::generate(const GenerationRequest& req) const {
  std::vector<std::string> signature;
  try {
    signature = attribute_signature(req.image, families_);
  } catch (const ValidationError& e) {
    throw GenerationError(GenerationError::Kind::kGenerator, req.image.id,
                          e.what());
  }
  switch (req.role) {
    case PromptRole::kCaption:
      return describe(signature);
    case PromptRole::kModification: {
      Rng rng(mix_seed(seed_, fnv1a64(req.image.id)));
      const std::size_t f = rng.below(families_.size());
      const auto& fam = families_[f];
      const auto cur = std::find(fam.values.begin(), fam.values.end(),
                                 signature[f]) -
                       fam.values.begin();
      std::size_t v = rng.below(fam.values.size() - 1);
      if (static_cast<std::ptrdiff_t>(v) >= cur) ++v;
      return modification_text(fam.name, fam.values[v]);
    }
    case PromptRole::kTargetText: {
      if (!req.modification || req.modification->empty()) {
        throw GenerationError(GenerationError::Kind::kGenerator, req.image.id,
                              "target text requested without a modification");
      }
      try {
        return describe(apply_modification(signature, *req.modification));
      } catch (const ValidationError& e) {
        throw GenerationError(GenerationError::Kind::kGenerator, req.image.id,
                              e.what());
      }
    }
  }
  throw GenerationError(GenerationError::Kind::kGenerator, req.image.id,
                        "unknown prompt role");
}

}  // namespace cir
