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

#include <chrono>
#include <functional>
#include <optional>
#include <string>

#include "json.hpp"

#include "cir/curation/generator.hpp"

namespace cir {

struct ImageAttachment {
  std::string mime;   // e.g. "image/png"
  std::string bytes;  // raw file contents
};

// Maps an image id to the file attached to the chat request.
using ImageResolver =
    std::function<std::optional<ImageAttachment>(const std::string& id)>;

// Looks for <dir>/<id>.{png,jpg,jpeg,webp}.
ImageResolver directory_image_resolver(std::string dir);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_delay{500};
  double factor = 2.0;
  std::chrono::milliseconds max_delay{30000};

  // Delay before retry number `retry` (0-based): initial * factor^retry,
  // capped at max_delay.
  std::chrono::milliseconds delay_for(int retry) const;
};

struct RemoteGeneratorConfig {
  // Full URL; a bare scheme://host[:port] gets /v1/chat/completions.
  std::string endpoint;
  std::string model;
  std::string api_key;  // sent as a Bearer token when nonempty
  double temperature = 0.0;
  std::chrono::seconds timeout{60};
  RetryPolicy retry;
  ImageResolver images;
  // Replaced in tests to avoid real sleeping.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Environment variable holding the credential for the remote generator.
inline constexpr const char* kApiKeyEnv = "CIR_MLLM_API_KEY";

std::string base64_encode(std::string_view bytes);

// Client for an OpenAI-compatible chat-completions endpoint. Each call opens
// its own connection, so concurrent generate() calls are safe.
class RemoteGenerator : public TextGenerator {
 public:
  explicit RemoteGenerator(RemoteGeneratorConfig config);

  std::string generate(const GenerationRequest& request) const override;

  // Body sent for `request`; exposed for tests.
  nlohmann::json build_request(const GenerationRequest& request) const;
  // First choice's message content; throws DecodeError on any other shape.
  static std::string parse_reply(const std::string& body);

  const std::string& host() const { return host_; }
  const std::string& path() const { return path_; }

 private:
  RemoteGeneratorConfig config_;
  std::string host_;  // scheme://host[:port]
  std::string path_;
};

}  // namespace cir
