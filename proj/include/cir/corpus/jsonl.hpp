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
#include <vector>

#include "json.hpp"

#include "cir/corpus/records.hpp"

namespace cir {

void to_json(nlohmann::json& j, const TripletRecord& r);
void from_json(const nlohmann::json& j, TripletRecord& r);
void to_json(nlohmann::json& j, const CaptionRecord& r);
void from_json(const nlohmann::json& j, CaptionRecord& r);
void to_json(nlohmann::json& j, const EvalCase& r);
void from_json(const nlohmann::json& j, EvalCase& r);

// One compact JSON object per line, '\n' terminated.
template <typename T>
std::string to_jsonl(const std::vector<T>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += nlohmann::json(rec).dump();
    out += '\n';
  }
  return out;
}

// Blank lines are skipped; a malformed line raises FormatError with its
// line number.
template <typename T>
std::vector<T> from_jsonl(const std::string& text);

template <typename T>
void write_jsonl(const std::vector<T>& records, const std::string& path);
template <typename T>
std::vector<T> read_jsonl(const std::string& path);

}  // namespace cir
