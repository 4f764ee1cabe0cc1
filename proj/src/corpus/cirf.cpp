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

#include "cir/corpus/cirf.hpp"

#include "cir/core/binary_io.hpp"
#include "cir/core/errors.hpp"

namespace cir {

std::string encode_features(const std::vector<ImageRecord>& records) {
  validate_records(records);
  ByteWriter w;
  w.put_bytes(kCirfMagic);
  w.put_u32(kCirfVersion);
  w.put_u64(records.size());
  for (const auto& rec : records) {
    w.put_string(rec.id);
    w.put_u32(static_cast<std::uint32_t>(rec.tokens.rows()));
    w.put_u32(static_cast<std::uint32_t>(rec.tokens.dim()));
    for (float v : rec.tokens.data()) w.put_f32(v);
    w.put_u32(static_cast<std::uint32_t>(rec.meta.size()));
    for (const auto& [key, value] : rec.meta) {
      w.put_string(key);
      w.put_string(value);
    }
  }
  return w.take();
}

std::vector<ImageRecord> decode_features(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kCirfMagic.size() ||
      r.get_bytes(kCirfMagic.size(), "magic") != kCirfMagic) {
    throw FormatError("bad magic: not a CIRF feature file");
  }
  const auto version = r.get_u32("version");
  if (version != kCirfVersion) {
    throw FormatError("version mismatch: expected CIRF v" +
                      std::to_string(kCirfVersion) + ", found v" +
                      std::to_string(version));
  }
  const auto count = r.get_u64("record count");
  std::vector<ImageRecord> out;
  // Each record needs at least 16 header bytes; cap the reservation so a
  // corrupt count cannot trigger a huge allocation.
  out.reserve(std::min<std::uint64_t>(count, r.remaining() / 16));
  for (std::uint64_t i = 0; i < count; ++i) {
    ImageRecord rec;
    rec.id = r.get_string("record id");
    const std::uint64_t rows = r.get_u32("rows");
    const std::uint64_t dim = r.get_u32("dim");
    if (rows == 0 || dim == 0) {
      throw FormatError("record '" + rec.id + "' declares an empty matrix");
    }
    const std::uint64_t payload = rows * dim * sizeof(float);
    if (payload > r.remaining()) {
      throw FormatError("truncated payload: record '" + rec.id +
                        "' declares " + std::to_string(rows) + "x" +
                        std::to_string(dim) +
                        " values but the file ends early (dimension header "
                        "inconsistent with payload length)");
    }
    std::vector<float> data(rows * dim);
    for (auto& v : data) v = r.get_f32("feature values");
    rec.tokens = FeatureMatrix(rows, dim, std::move(data));
    const auto meta_count = r.get_u32("meta count");
    for (std::uint32_t m = 0; m < meta_count; ++m) {
      auto key = r.get_string("meta key");
      auto value = r.get_string("meta value");
      rec.meta.emplace(std::move(key), std::move(value));
    }
    out.push_back(std::move(rec));
  }
  if (r.remaining() != 0) {
    throw FormatError("dimension header inconsistent with payload length: " +
                      std::to_string(r.remaining()) +
                      " trailing bytes after the last record");
  }
  return out;
}

void save_features(const std::vector<ImageRecord>& records,
                   const std::string& path) {
  write_file(path, encode_features(records));
}

std::vector<ImageRecord> load_features(const std::string& path) {
  return decode_features(read_file(path));
}

}  // namespace cir
