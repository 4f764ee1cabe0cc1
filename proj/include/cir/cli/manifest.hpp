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

#include "json.hpp"

namespace cir::cli {

// Provenance record written next to every command's outputs: enough to
// re-run the command and check that its inputs are unchanged.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void set_config(nlohmann::json config) { config_ = std::move(config); }
  // Records the SHA-256 of a file, or of every regular file below a
  // directory (sorted by relative path).
  void add_input(const std::string& role, const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  // Writes <dir>/manifest.json.
  void write(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::uint64_t seed_ = 0;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::object();
  std::vector<std::string> outputs_;
};

}  // namespace cir::cli
