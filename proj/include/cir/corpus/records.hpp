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

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cir/core/feature_matrix.hpp"

namespace cir {

// One unlabeled image, represented by the precomputed token features of a
// frozen upstream encoder. `meta` carries optional labels (synthetic
// corpora store their attribute values here).
struct ImageRecord {
  std::string id;
  FeatureMatrix tokens;
  std::map<std::string, std::string> meta;

  void validate() const;
  bool operator==(const ImageRecord&) const = default;
};

// (reference image, modification text, target text) supervision.
struct TripletRecord {
  std::string ref_id;
  std::string modification;
  std::string target_text;

  bool operator==(const TripletRecord&) const = default;
};

struct CaptionRecord {
  std::string image_id;
  std::string caption;

  bool operator==(const CaptionRecord&) const = default;
};

// A benchmark query with its accepted targets. `subset_ids`, when present,
// is the restricted candidate pool used for subset recall; `category` groups
// cases for per-category plus macro-averaged reporting.
struct EvalCase {
  std::string query_id;
  std::string ref_id;
  std::string modification;
  std::vector<std::string> gold_ids;
  std::optional<std::vector<std::string>> subset_ids;
  std::optional<std::string> category;

  bool operator==(const EvalCase&) const = default;
};

// Id -> position lookup over a record list; rejects empty or duplicate ids.
class ImageLookup {
 public:
  explicit ImageLookup(const std::vector<ImageRecord>& images);

  const ImageRecord& at(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.contains(id); }
  std::size_t position(const std::string& id) const;

 private:
  const std::vector<ImageRecord>* images_;
  std::unordered_map<std::string, std::size_t> index_;
};

void validate_records(const std::vector<ImageRecord>& images);
void validate_triplets(const std::vector<TripletRecord>& triplets,
                       const ImageLookup& lookup);
void validate_captions(const std::vector<CaptionRecord>& captions,
                       const ImageLookup& lookup);
// Checks gold/subset containment; `lookup` is the candidate corpus.
void validate_cases(const std::vector<EvalCase>& cases,
                    const ImageLookup& lookup);

}  // namespace cir
