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

#include "cir/corpus/records.hpp"

#include <algorithm>
#include <unordered_set>

#include "cir/core/errors.hpp"

namespace cir {

void ImageRecord::validate() const {
  if (id.empty()) throw ValidationError("image record: empty id");
  tokens.validate("image '" + id + "'");
}

ImageLookup::ImageLookup(const std::vector<ImageRecord>& images)
    : images_(&images) {
  index_.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].id.empty()) {
      throw ValidationError("image record at position " + std::to_string(i) +
                            " has an empty id");
    }
    if (!index_.emplace(images[i].id, i).second) {
      throw ValidationError("duplicate image id '" + images[i].id + "'");
    }
  }
}

const ImageRecord& ImageLookup::at(const std::string& id) const {
  return (*images_)[position(id)];
}

std::size_t ImageLookup::position(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw ValidationError("unknown image id '" + id + "'");
  }
  return it->second;
}

void validate_records(const std::vector<ImageRecord>& images) {
  ImageLookup lookup(images);
  for (const auto& rec : images) rec.validate();
}

void validate_triplets(const std::vector<TripletRecord>& triplets,
                       const ImageLookup& lookup) {
  for (const auto& t : triplets) {
    if (!lookup.contains(t.ref_id)) {
      throw ValidationError("triplet references unknown image '" + t.ref_id +
                            "'");
    }
    if (t.modification.empty() || t.target_text.empty()) {
      throw ValidationError("triplet for '" + t.ref_id + "' has empty text");
    }
  }
}

void validate_captions(const std::vector<CaptionRecord>& captions,
                       const ImageLookup& lookup) {
  for (const auto& c : captions) {
    if (!lookup.contains(c.image_id)) {
      throw ValidationError("caption references unknown image '" +
                            c.image_id + "'");
    }
    if (c.caption.empty()) {
      throw ValidationError("caption for '" + c.image_id + "' is empty");
    }
  }
}

void validate_cases(const std::vector<EvalCase>& cases,
                    const ImageLookup& lookup) {
  for (const auto& c : cases) {
    const std::string label = c.query_id.empty() ? c.ref_id : c.query_id;
    if (!lookup.contains(c.ref_id)) {
      throw ValidationError("eval case '" + label +
                            "' references unknown image '" + c.ref_id + "'");
    }
    if (c.modification.empty()) {
      throw ValidationError("eval case '" + label + "' has empty modification");
    }
    if (c.gold_ids.empty()) {
      throw ValidationError("eval case '" + label + "' has no gold ids");
    }
    for (const auto& g : c.gold_ids) {
      if (!lookup.contains(g)) {
        throw ValidationError("eval case '" + label + "' gold id '" + g +
                              "' is not a candidate");
      }
    }
    if (c.subset_ids) {
      std::unordered_set<std::string> subset(c.subset_ids->begin(),
                                             c.subset_ids->end());
      for (const auto& g : c.gold_ids) {
        if (!subset.contains(g)) {
          throw ValidationError("eval case '" + label + "' gold id '" + g +
                                "' is outside its subset");
        }
      }
    }
  }
}

}  // namespace cir
