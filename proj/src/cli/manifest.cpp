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

#include "cir/cli/manifest.hpp"

#include <algorithm>

#include "cir/core/binary_io.hpp"
#include "cir/core/digest.hpp"
#include "cir/core/errors.hpp"
#include "cir/version.hpp"

namespace cir::cli {

namespace fs = std::filesystem;
using nlohmann::json;

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)) {}

void RunManifest::add_input(const std::string& role, const fs::path& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    json entries = json::object();
    for (const auto& f : files) {
      entries[fs::relative(f, path).generic_string()] = sha256_file(f);
    }
    inputs_[role] = {{"path", path.generic_string()}, {"files", entries}};
  } else if (fs::is_regular_file(path)) {
    inputs_[role] = {{"path", path.generic_string()},
                     {"sha256", sha256_file(path)}};
  } else {
    throw IoError("input '" + path.string() + "' does not exist");
  }
}

void RunManifest::add_output(const fs::path& path) {
  outputs_.push_back(path.generic_string());
}

json RunManifest::to_json() const {
  return json{{"tool", "cir"},
              {"version", kVersion},
              {"command", command_},
              {"argv", argv_},
              {"seed", seed_},
              {"config", config_},
              {"inputs", inputs_},
              {"outputs", outputs_}};
}

void RunManifest::write(const fs::path& dir) const {
  write_file((dir / "manifest.json").string(), to_json().dump(2) + "\n");
}

}  // namespace cir::cli
