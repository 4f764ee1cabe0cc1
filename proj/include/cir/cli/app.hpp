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
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cir/corpus/synth.hpp"
#include "cir/curation/generator.hpp"
#include "cir/encoder/encoder.hpp"
#include "cir/training/trainer.hpp"

namespace cir::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

// Resolved settings from a JSON config file with optional sections
//   {"encoder": {...}, "train": {...}, "grad_check": {...}}
// Command-line flags are applied on top (flags > file > defaults).
struct PipelineConfig {
  EncoderConfig encoder;
  TrainConfig train;
  nlohmann::json grad_check = nlohmann::json::object();

  nlohmann::json to_json() const;
};

PipelineConfig load_pipeline_config(const std::optional<std::string>& path);

// How target texts and captions are produced.
struct GeneratorOptions {
  std::string kind = "template";  // template | remote
  std::string attrs;              // attribute spec for the template generator
  std::uint64_t seed = 0;
  std::string endpoint;
  std::string model;
  std::string image_dir;
  std::string prompts_dir;

  nlohmann::json to_json() const;
};

std::unique_ptr<TextGenerator> make_generator(const GeneratorOptions& options);
PromptSet resolve_prompts(const GeneratorOptions& options);

// Parses argv (argv[0] is the program name) and runs one subcommand.
// Diagnostics go to `err`, summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace cir::cli
