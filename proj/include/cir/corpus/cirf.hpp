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
#include <vector>

#include "cir/corpus/records.hpp"

namespace cir {

// CIRF binary feature file:
//   "CIRF" | u32 version | u64 count |
//   per record: u32 id_len, id bytes, u32 rows, u32 dim, rows*dim f32,
//               u32 meta_count, (u32 len, key, u32 len, value)*
// All integers and floats are little-endian.
inline constexpr std::string_view kCirfMagic = "CIRF";
inline constexpr std::uint32_t kCirfVersion = 1;

std::string encode_features(const std::vector<ImageRecord>& records);
std::vector<ImageRecord> decode_features(std::string_view bytes);

// Validates every record before anything is written.
void save_features(const std::vector<ImageRecord>& records,
                   const std::string& path);
std::vector<ImageRecord> load_features(const std::string& path);

}  // namespace cir
