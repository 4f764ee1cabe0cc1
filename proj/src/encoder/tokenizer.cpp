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

#include "cir/encoder/tokenizer.hpp"

#include <cctype>
#include <string>

#include "cir/core/errors.hpp"
#include "cir/core/hash.hpp"

namespace cir {

namespace {

bool is_separator(unsigned char c) {
  return c < 0x80 && (std::isspace(c) || std::ispunct(c));
}

}  // namespace

TokenSequence tokenize(std::string_view text, std::uint32_t vocab) {
  if (vocab == 0) throw ValidationError("tokenize: vocab must be positive");
  TokenSequence out;
  std::string piece;
  auto flush = [&] {
    if (piece.empty()) return;
    out.ids.push_back(static_cast<std::uint32_t>(fnv1a64(piece) % vocab));
    piece.clear();
  };
  for (unsigned char c : text) {
    if (is_separator(c)) {
      flush();
    } else {
      piece.push_back(c < 0x80 ? static_cast<char>(std::tolower(c))
                               : static_cast<char>(c));
    }
  }
  flush();
  if (out.ids.empty()) out.ids.push_back(kEmptyTokenId);
  return out;
}

}  // namespace cir
