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

#include "cir/encoder/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "cir/core/binary_io.hpp"
#include "cir/core/errors.hpp"

namespace cir {

using nlohmann::json;

json config_to_json(const EncoderConfig& c) {
  return json{{"k", c.k},
              {"d", c.d},
              {"blocks", c.blocks},
              {"heads", c.heads},
              {"vocab", c.vocab},
              {"image_dim", c.image_dim},
              {"max_text_len", c.max_text_len}};
}

EncoderConfig config_from_json(const json& j, EncoderConfig c) {
  static constexpr std::array<std::string_view, 7> kKeys = {
      "k", "d", "blocks", "heads", "vocab", "image_dim", "max_text_len"};
  if (!j.is_object()) throw ValidationError("encoder config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ValidationError("encoder config: unknown key '" + key + "'");
    }
  }
  try {
    c.k = j.value("k", c.k);
    c.d = j.value("d", c.d);
    c.blocks = j.value("blocks", c.blocks);
    c.heads = j.value("heads", c.heads);
    c.vocab = j.value("vocab", c.vocab);
    c.image_dim = j.value("image_dim", c.image_dim);
    c.max_text_len = j.value("max_text_len", c.max_text_len);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("encoder config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string encode_checkpoint(const EncoderParams& params) {
  params.validate();
  json dir = json::array();
  std::uint64_t offset = 0;
  params.for_each([&](const std::string& name, const Mat& m) {
    dir.push_back({{"name", name},
                   {"rows", m.rows()},
                   {"cols", m.cols()},
                   {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(float);
  });
  const json header{{"config", config_to_json(params.config)},
                    {"tensors", std::move(dir)},
                    {"payload_bytes", offset}};
  const std::string header_text = header.dump();

  ByteWriter w;
  w.put_bytes(kCirpMagic);
  w.put_u32(kCirpVersion);
  w.put_u64(header_text.size());
  w.put_bytes(header_text);
  params.for_each([&](const std::string&, const Mat& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      w.put_f32(static_cast<float>(m.data()[i]));
    }
  });
  return w.take();
}

EncoderParams decode_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kCirpMagic.size() ||
      r.get_bytes(kCirpMagic.size(), "magic") != kCirpMagic) {
    throw FormatError("bad magic: not a CIRP checkpoint");
  }
  const auto version = r.get_u32("version");
  if (version != kCirpVersion) {
    throw FormatError("version mismatch: expected CIRP v" +
                      std::to_string(kCirpVersion) + ", found v" +
                      std::to_string(version));
  }
  const auto header_len = r.get_u64("header length");
  json header;
  try {
    header = json::parse(r.get_bytes(header_len, "header"));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint header is not JSON: ") +
                      e.what());
  }
  EncoderParams params;
  std::map<std::string, json> entries;
  std::uint64_t payload_bytes = 0;
  try {
    params = zeros_like(config_from_json(header.at("config")));
    for (const auto& t : header.at("tensors")) {
      entries[t.at("name").get<std::string>()] = t;
    }
    payload_bytes = header.at("payload_bytes").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  const std::string_view payload = bytes.substr(r.position());
  if (payload.size() != payload_bytes) {
    throw FormatError("truncated payload: checkpoint declares " +
                      std::to_string(payload_bytes) + " payload bytes, found " +
                      std::to_string(payload.size()));
  }
  std::size_t matched = 0;
  params.for_each([&](const std::string& name, Mat& m) {
    auto it = entries.find(name);
    if (it == entries.end()) {
      throw FormatError("checkpoint is missing tensor '" + name + "'");
    }
    const auto& e = it->second;
    const auto rows = e.at("rows").get<Eigen::Index>();
    const auto cols = e.at("cols").get<Eigen::Index>();
    const auto off = e.at("offset").get<std::uint64_t>();
    if (rows != m.rows() || cols != m.cols()) {
      throw FormatError("checkpoint tensor '" + name +
                        "' shape disagrees with its config");
    }
    const std::uint64_t len = static_cast<std::uint64_t>(m.size()) * 4;
    if (off > payload.size() || len > payload.size() - off) {
      throw FormatError("checkpoint tensor '" + name +
                        "' lies outside the payload");
    }
    ByteReader tr(payload.substr(off, len));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = tr.get_f32("tensor values");
    }
    ++matched;
  });
  if (matched != entries.size()) {
    throw FormatError("checkpoint has tensors its config does not use");
  }
  params.validate();
  return params;
}

void save_checkpoint(const EncoderParams& params, const std::string& path) {
  write_file(path, encode_checkpoint(params));
}

EncoderParams load_checkpoint(const std::string& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace cir
