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

#include <string>
#include <string_view>

#include "json.hpp"

#include "cir/encoder/encoder.hpp"

namespace cir {

// CIRP checkpoint:
//   "CIRP" | u32 version | u64 header_len | header JSON |
//   little-endian f32 payload
// The header holds the encoder config and a tensor directory
// [{name, rows, cols, offset}] with byte offsets into the payload.
inline constexpr std::string_view kCirpMagic = "CIRP";
inline constexpr std::uint32_t kCirpVersion = 1;

nlohmann::json config_to_json(const EncoderConfig& config);
// Missing keys keep the values of `base`; unknown keys are rejected.
EncoderConfig config_from_json(const nlohmann::json& j, EncoderConfig base = {});

std::string encode_checkpoint(const EncoderParams& params);
EncoderParams decode_checkpoint(std::string_view bytes);

void save_checkpoint(const EncoderParams& params, const std::string& path);
EncoderParams load_checkpoint(const std::string& path);

}  // namespace cir
