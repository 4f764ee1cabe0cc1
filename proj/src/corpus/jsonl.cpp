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

#include "cir/corpus/jsonl.hpp"

#include <sstream>

#include "cir/core/binary_io.hpp"
#include "cir/core/errors.hpp"

namespace cir {

using nlohmann::json;

namespace {

std::string require_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw FormatError(std::string("missing or non-string field '") + key +
                      "'");
  }
  return it->get<std::string>();
}

std::vector<std::string> require_strings(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array()) {
    throw FormatError(std::string("missing or non-array field '") + key + "'");
  }
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw FormatError(std::string("non-string entry in '") + key + "'");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

void to_json(json& j, const TripletRecord& r) {
  j = json{{"ref_id", r.ref_id},
           {"modification", r.modification},
           {"target_text", r.target_text}};
}

void from_json(const json& j, TripletRecord& r) {
  r.ref_id = require_string(j, "ref_id");
  r.modification = require_string(j, "modification");
  r.target_text = require_string(j, "target_text");
}

void to_json(json& j, const CaptionRecord& r) {
  j = json{{"image_id", r.image_id}, {"caption", r.caption}};
}

void from_json(const json& j, CaptionRecord& r) {
  r.image_id = require_string(j, "image_id");
  r.caption = require_string(j, "caption");
}

void to_json(json& j, const EvalCase& r) {
  j = json::object();
  if (!r.query_id.empty()) j["query_id"] = r.query_id;
  j["ref_id"] = r.ref_id;
  j["modification"] = r.modification;
  j["gold_ids"] = r.gold_ids;
  if (r.subset_ids) j["subset_ids"] = *r.subset_ids;
  if (r.category) j["category"] = *r.category;
}

void from_json(const json& j, EvalCase& r) {
  r.query_id = j.contains("query_id") ? require_string(j, "query_id") : "";
  r.ref_id = require_string(j, "ref_id");
  r.modification = require_string(j, "modification");
  r.gold_ids = require_strings(j, "gold_ids");
  r.subset_ids.reset();
  if (j.contains("subset_ids") && !j.at("subset_ids").is_null()) {
    r.subset_ids = require_strings(j, "subset_ids");
  }
  r.category.reset();
  if (j.contains("category") && !j.at("category").is_null()) {
    r.category = require_string(j, "category");
  }
}

template <typename T>
std::vector<T> from_jsonl(const std::string& text) {
  std::vector<T> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const json::exception& e) {
      throw FormatError("JSONL line " + std::to_string(line_no) + ": " +
                        e.what());
    } catch (const FormatError& e) {
      throw FormatError("JSONL line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return out;
}

template <typename T>
void write_jsonl(const std::vector<T>& records, const std::string& path) {
  write_file(path, to_jsonl(records));
}

template <typename T>
std::vector<T> read_jsonl(const std::string& path) {
  return from_jsonl<T>(read_file(path));
}

#define CIR_INSTANTIATE_JSONL(T)                                 \
  template std::vector<T> from_jsonl<T>(const std::string&);     \
  template void write_jsonl<T>(const std::vector<T>&, const std::string&); \
  template std::vector<T> read_jsonl<T>(const std::string&);

CIR_INSTANTIATE_JSONL(TripletRecord)
CIR_INSTANTIATE_JSONL(CaptionRecord)
CIR_INSTANTIATE_JSONL(EvalCase)

#undef CIR_INSTANTIATE_JSONL

}  // namespace cir
