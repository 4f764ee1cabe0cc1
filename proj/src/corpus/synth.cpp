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

#include "cir/corpus/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "cir/core/errors.hpp"
#include "cir/core/rng.hpp"

namespace cir {

std::vector<AttributeFamily> SynthConfig::default_families() {
  return {
      {"size", {"small", "medium", "large", "huge"}},
      {"color", {"red", "green", "blue", "yellow"}},
      {"shape", {"cube", "sphere", "cone", "cylinder"}},
  };
}

std::size_t SynthConfig::one_hot_width() const {
  std::size_t w = 0;
  for (const auto& f : families) w += f.values.size();
  return w;
}

void SynthConfig::validate() const {
  if (images == 0) throw ValidationError("synth: zero images requested");
  if (tokens == 0) throw ValidationError("synth: token count must be >= 1");
  if (families.empty()) throw ValidationError("synth: no attribute families");
  for (const auto& f : families) {
    if (f.name.empty()) throw ValidationError("synth: unnamed family");
    if (f.values.size() < 2) {
      throw ValidationError("synth: family '" + f.name +
                            "' needs at least two values");
    }
  }
  if (dim < one_hot_width()) {
    throw ValidationError("synth: dim " + std::to_string(dim) +
                          " is smaller than the one-hot width " +
                          std::to_string(one_hot_width()));
  }
  if (!(noise >= 0.0)) throw ValidationError("synth: noise must be >= 0");
}

std::vector<AttributeFamily> parse_attribute_spec(const std::string& spec) {
  std::vector<AttributeFamily> out;
  std::stringstream families(spec);
  std::string item;
  while (std::getline(families, item, ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("attribute spec '" + item +
                            "' is not of the form name=v1,v2");
    }
    AttributeFamily fam{item.substr(0, eq), {}};
    std::stringstream values(item.substr(eq + 1));
    std::string v;
    while (std::getline(values, v, ',')) {
      if (!v.empty()) fam.values.push_back(v);
    }
    if (fam.values.size() < 2) {
      throw ValidationError("attribute family '" + fam.name +
                            "' needs at least two values");
    }
    for (const auto& other : out) {
      if (other.name == fam.name) {
        throw ValidationError("attribute family '" + fam.name +
                              "' listed twice");
      }
    }
    out.push_back(std::move(fam));
  }
  if (out.empty()) throw ValidationError("attribute spec is empty");
  return out;
}

std::string modification_text(const std::string& family,
                              const std::string& value) {
  return "change the " + family + " to " + value;
}

std::vector<std::string> attribute_signature(
    const ImageRecord& image, const std::vector<AttributeFamily>& families) {
  std::vector<std::string> sig;
  sig.reserve(families.size());
  for (const auto& f : families) {
    auto it = image.meta.find(f.name);
    if (it == image.meta.end()) {
      throw ValidationError("image '" + image.id +
                            "' has no attribute '" + f.name + "'");
    }
    sig.push_back(it->second);
  }
  return sig;
}

namespace {

std::string image_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img%05zu", i);
  return buf;
}

std::string query_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "q%04zu", i);
  return buf;
}

}  // namespace

SynthCorpus synth_corpus(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t nfam = config.families.size();
  std::vector<std::size_t> offsets(nfam, 0);
  for (std::size_t f = 1; f < nfam; ++f) {
    offsets[f] = offsets[f - 1] + config.families[f - 1].values.size();
  }

  SynthCorpus out;
  Rng attr_rng(mix_seed(seed, 1));
  Rng noise_rng(mix_seed(seed, 2));
  std::vector<std::vector<std::size_t>> value_idx(config.images);
  out.images.reserve(config.images);
  for (std::size_t i = 0; i < config.images; ++i) {
    auto& vals = value_idx[i];
    vals.resize(nfam);
    for (std::size_t f = 0; f < nfam; ++f) {
      vals[f] = attr_rng.below(config.families[f].values.size());
    }
    FeatureMatrix tokens(config.tokens, config.dim);
    for (std::size_t r = 0; r < config.tokens; ++r) {
      const std::size_t f = r % nfam;
      tokens(r, offsets[f] + vals[f]) = 1.0f;
      if (config.noise > 0.0) {
        for (std::size_t c = 0; c < config.dim; ++c) {
          tokens(r, c) = static_cast<float>(tokens(r, c) +
                                            config.noise * noise_rng.normal());
        }
      }
    }
    ImageRecord rec{image_id(i), std::move(tokens), {}};
    for (std::size_t f = 0; f < nfam; ++f) {
      rec.meta[config.families[f].name] = config.families[f].values[vals[f]];
    }
    out.images.push_back(std::move(rec));
  }

  // Signature -> image positions, for gold and subset construction.
  std::map<std::vector<std::size_t>, std::vector<std::size_t>> by_signature;
  for (std::size_t i = 0; i < config.images; ++i) {
    by_signature[value_idx[i]].push_back(i);
  }

  Rng case_rng(mix_seed(seed, 3));
  std::vector<std::size_t> order(config.images);
  std::iota(order.begin(), order.end(), 0);
  case_rng.shuffle(std::span(order));

  std::size_t next_ref = 0;
  while (out.eval_cases.size() < config.eval_cases &&
         next_ref < order.size()) {
    const std::size_t ref = order[next_ref++];
    const std::size_t f = case_rng.below(nfam);
    const auto& fam = config.families[f];
    std::size_t v = case_rng.below(fam.values.size() - 1);
    if (v >= value_idx[ref][f]) ++v;
    auto target = value_idx[ref];
    target[f] = v;
    auto gold_it = by_signature.find(target);
    if (gold_it == by_signature.end()) continue;  // signature absent

    EvalCase ec;
    ec.query_id = query_id(out.eval_cases.size());
    ec.ref_id = out.images[ref].id;
    ec.modification = modification_text(fam.name, fam.values[v]);
    for (std::size_t g : gold_it->second) {
      ec.gold_ids.push_back(out.images[g].id);
    }
    std::vector<std::string> subset;
    for (std::size_t i = 0; i < config.images; ++i) {
      std::size_t diff = 0;
      for (std::size_t a = 0; a < nfam; ++a) diff += value_idx[i][a] != target[a];
      if (diff <= 1) subset.push_back(out.images[i].id);
    }
    ec.subset_ids = std::move(subset);
    ec.category = fam.name;
    out.eval_cases.push_back(std::move(ec));
  }
  return out;
}

}  // namespace cir
