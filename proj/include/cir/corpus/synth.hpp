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
#include <string>
#include <vector>

#include "cir/corpus/records.hpp"

namespace cir {

struct AttributeFamily {
  std::string name;
  std::vector<std::string> values;
};

// Parameters of the structured stand-in for an unlabeled image collection.
// Token row r carries the one-hot block of family (r mod families) at that
// family's column offset, plus N(0, noise^2) on every entry.
struct SynthConfig {
  std::vector<AttributeFamily> families = default_families();
  std::size_t images = 500;
  std::size_t tokens = 4;
  std::size_t dim = 16;
  double noise = 0.05;
  std::size_t eval_cases = 100;

  static std::vector<AttributeFamily> default_families();
  // Total width of all one-hot blocks.
  std::size_t one_hot_width() const;
  void validate() const;
};

// Parses "color=red,green;shape=cube,sphere".
std::vector<AttributeFamily> parse_attribute_spec(const std::string& spec);

struct SynthCorpus {
  std::vector<ImageRecord> images;
  std::vector<EvalCase> eval_cases;
};

// Pure function of (config, seed). Eval references are drawn without
// replacement; each case flips exactly one attribute of its reference and
// lists every image with the resulting signature as gold. `subset_ids`
// holds the images within one attribute of the target signature and
// `category` names the modified family.
SynthCorpus synth_corpus(const SynthConfig& config, std::uint64_t seed);

// The modification template used for synthetic cases and by the template
// generator: "change the <family> to <value>".
std::string modification_text(const std::string& family,
                              const std::string& value);

// Attribute values of `image` in family order, read from its metadata.
std::vector<std::string> attribute_signature(
    const ImageRecord& image, const std::vector<AttributeFamily>& families);

}  // namespace cir
