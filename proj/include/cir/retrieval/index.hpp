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

#include <filesystem>
#include <string>
#include <vector>

#include "cir/corpus/records.hpp"
#include "cir/encoder/encoder.hpp"

namespace cir {

// Candidate set: encoded features plus the raw records they came from, so
// baseline modes and checkpoint swaps can re-encode without the corpus.
struct Index {
  std::vector<std::string> ids;
  std::vector<FeatureMatrix> features;  // encode_image of each candidate
  std::vector<ImageRecord> raw;
  EncoderConfig config;
  std::string params_digest;  // sha256 of the encoding checkpoint

  std::size_t size() const { return ids.size(); }
  // Throws ValidationError if sizes, ids or feature shapes disagree.
  void validate() const;
};

// SHA-256 of the CIRP encoding of `params`.
std::string params_digest(const EncoderParams& params);

// Encodes every image once, in input order. Throws ValidationError on an
// empty list or duplicate ids.
Index build_index(const std::vector<ImageRecord>& images,
                  const EncoderParams& params, std::size_t threads = 1);

// Returns `index` re-encoded with `params` unless it was built from them.
Index reencode_if_stale(Index index, const EncoderParams& params,
                        std::size_t threads = 1);

// On-disk layout under `dir`:
//   candidates.cirf  raw candidate records
//   features.cirf    encoded features, same ids and order
//   index.json       {"format", "version", "count", "encoder", "params_sha256"}
void save_index(const Index& index, const std::filesystem::path& dir);
Index load_index(const std::filesystem::path& dir);

}  // namespace cir
