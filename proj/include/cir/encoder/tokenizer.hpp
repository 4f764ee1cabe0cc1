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
#include <string_view>
#include <vector>

namespace cir {

struct TokenSequence {
  std::vector<std::uint32_t> ids;
  bool operator==(const TokenSequence&) const = default;
};

// Id produced for text with no word pieces.
inline constexpr std::uint32_t kEmptyTokenId = 0;

// ASCII-lowercases, splits on whitespace and ASCII punctuation, and maps
// each piece to fnv1a64(piece) % vocab. Bytes >= 0x80 stay inside pieces.
TokenSequence tokenize(std::string_view text, std::uint32_t vocab);

}  // namespace cir
