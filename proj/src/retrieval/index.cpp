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

#include "cir/retrieval/index.hpp"

#include <fstream>

#include "json.hpp"

#include "cir/core/binary_io.hpp"
#include "cir/core/digest.hpp"
#include "cir/core/errors.hpp"
#include "cir/core/parallel.hpp"
#include "cir/corpus/cirf.hpp"
#include "cir/encoder/checkpoint.hpp"

namespace cir {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kIndexFormat = "cir-index";
constexpr int kIndexVersion = 1;

}  // namespace

void Index::validate() const {
  if (ids.size() != features.size() || ids.size() != raw.size()) {
    throw ValidationError("index: ids, features and raw records differ in count");
  }
  if (ids.empty()) throw ValidationError("index: no candidates");
  ImageLookup lookup(raw);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (raw[i].id != ids[i]) {
      throw ValidationError("index: raw record " + std::to_string(i) +
                            " has id '" + raw[i].id + "', expected '" +
                            ids[i] + "'");
    }
    if (features[i].rows() != config.k || features[i].dim() != config.d) {
      throw ValidationError("index: features of '" + ids[i] +
                            "' do not match the encoder shape");
    }
  }
}

std::string params_digest(const EncoderParams& params) {
  return sha256_hex(encode_checkpoint(params));
}

Index build_index(const std::vector<ImageRecord>& images,
                  const EncoderParams& params, std::size_t threads) {
  if (images.empty()) throw ValidationError("build_index: no images");
  validate_records(images);
  ImageLookup lookup(images);
  Index index;
  index.config = params.config;
  index.raw = images;
  index.ids.reserve(images.size());
  for (const auto& img : images) index.ids.push_back(img.id);
  index.features.assign(images.size(), FeatureMatrix());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    index.features[i] = encode_image(images[i].tokens, params);
  });
  index.params_digest = params_digest(params);
  return index;
}

Index reencode_if_stale(Index index, const EncoderParams& params,
                        std::size_t threads) {
  if (index.params_digest == params_digest(params)) return index;
  return build_index(index.raw, params, threads);
}

void save_index(const Index& index, const fs::path& dir) {
  index.validate();
  fs::create_directories(dir);
  std::vector<ImageRecord> encoded;
  encoded.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    encoded.push_back(ImageRecord{index.ids[i], index.features[i], {}});
  }
  save_features(index.raw, (dir / "candidates.cirf").string());
  save_features(encoded, (dir / "features.cirf").string());
  const json meta = {{"format", kIndexFormat},
                     {"version", kIndexVersion},
                     {"count", index.size()},
                     {"encoder", config_to_json(index.config)},
                     {"params_sha256", index.params_digest}};
  write_file((dir / "index.json").string(), meta.dump(2) + "\n");
}

Index load_index(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("index directory '" + dir.string() + "' not found");
  }
  json meta;
  try {
    meta = json::parse(read_file((dir / "index.json").string()));
  } catch (const json::exception& e) {
    throw FormatError("index.json: " + std::string(e.what()));
  }
  if (meta.value("format", "") != kIndexFormat ||
      meta.value("version", 0) != kIndexVersion) {
    throw FormatError("index.json: unsupported format or version");
  }
  Index index;
  try {
    index.config = config_from_json(meta.at("encoder"));
    index.params_digest = meta.at("params_sha256").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError("index.json: " + std::string(e.what()));
  }
  index.raw = load_features((dir / "candidates.cirf").string());
  auto encoded = load_features((dir / "features.cirf").string());
  if (encoded.size() != index.raw.size() ||
      meta.value("count", std::size_t{0}) != index.raw.size()) {
    throw FormatError("index: candidate and feature counts disagree");
  }
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    if (encoded[i].id != index.raw[i].id) {
      throw FormatError("index: feature record " + std::to_string(i) +
                        " is out of order");
    }
    index.ids.push_back(encoded[i].id);
    index.features.push_back(std::move(encoded[i].tokens));
  }
  index.validate();
  return index;
}

}  // namespace cir
