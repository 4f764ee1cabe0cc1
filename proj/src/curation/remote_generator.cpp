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

#include "cir/curation/remote_generator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <thread>

#include "httplib.h"

#include "cir/core/binary_io.hpp"

namespace cir {

using nlohmann::json;

ImageResolver directory_image_resolver(std::string dir) {
  return [dir = std::move(dir)](
             const std::string& id) -> std::optional<ImageAttachment> {
    static constexpr std::pair<const char*, const char*> kTypes[] = {
        {".png", "image/png"},
        {".jpg", "image/jpeg"},
        {".jpeg", "image/jpeg"},
        {".webp", "image/webp"}};
    for (const auto& [ext, mime] : kTypes) {
      const auto path = std::filesystem::path(dir) / (id + ext);
      if (std::filesystem::exists(path)) {
        return ImageAttachment{mime, read_file(path.string())};
      }
    }
    return std::nullopt;
  };
}

std::chrono::milliseconds RetryPolicy::delay_for(int retry) const {
  const double ms =
      static_cast<double>(initial_delay.count()) * std::pow(factor, retry);
  return std::chrono::milliseconds(static_cast<std::int64_t>(
      std::min(ms, static_cast<double>(max_delay.count()))));
}

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) |
                   (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                   static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (const auto rest = bytes.size() - i; rest > 0) {
    unsigned n = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) n |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

RemoteGenerator::RemoteGenerator(RemoteGeneratorConfig config)
    : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw ValidationError("remote generator requires an endpoint");
  }
  if (config_.model.empty()) {
    throw ValidationError("remote generator requires a model name");
  }
  if (config_.retry.max_attempts < 1) {
    throw ValidationError("retry policy needs at least one attempt");
  }
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("endpoint '" + config_.endpoint +
                          "' must start with http:// or https://");
  }
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  host_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/v1/chat/completions"
                                          : config_.endpoint.substr(path_start);
  if (!config_.sleep) {
    config_.sleep = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
}

json RemoteGenerator::build_request(const GenerationRequest& request) const {
  json content = json::array();
  if (config_.images) {
    auto attachment = config_.images(request.image.id);
    if (!attachment) {
      throw GenerationError(GenerationError::Kind::kGenerator,
                            request.image.id, "no image file to attach");
    }
    content.push_back(
        {{"type", "image_url"},
         {"image_url",
          {{"url", "data:" + attachment->mime + ";base64," +
                       base64_encode(attachment->bytes)}}}});
  }
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  return json{{"model", config_.model},
              {"messages", json::array({{{"role", "user"},
                                         {"content", std::move(content)}}})},
              {"temperature", config_.temperature}};
}

std::string RemoteGenerator::parse_reply(const std::string& body) {
  json reply;
  try {
    reply = json::parse(body);
  } catch (const json::parse_error& e) {
    throw DecodeError(std::string("malformed JSON reply: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("choices") ||
      !reply["choices"].is_array() || reply["choices"].empty()) {
    throw DecodeError("reply has no choices");
  }
  const auto& choice = reply["choices"][0];
  if (!choice.is_object() || !choice.contains("message") ||
      !choice["message"].is_object()) {
    throw DecodeError("first choice has no message");
  }
  const auto& content = choice["message"]["content"];
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    // Some servers return content as a list of typed parts.
    std::string text;
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text" &&
          part.contains("text") && part["text"].is_string()) {
        text += part["text"].get<std::string>();
      }
    }
    if (!text.empty()) return text;
  }
  throw DecodeError("first choice's message content is not text");
}

std::string RemoteGenerator::generate(const GenerationRequest& request) const {
  const std::string body = build_request(request).dump();
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  std::string last_error;
  int attempts = 0;
  for (int attempt = 0; attempt < config_.retry.max_attempts; ++attempt) {
    ++attempts;
    if (attempt > 0) config_.sleep(config_.retry.delay_for(attempt - 1));

    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      try {
        return parse_reply(res->body);
      } catch (const DecodeError& e) {
        throw GenerationError(GenerationError::Kind::kDecode, request.image.id,
                              e.what());
      }
    }
    last_error = "HTTP " + std::to_string(res->status);
    const bool retryable = res->status == 408 || res->status == 429 ||
                           res->status >= 500;
    if (!retryable) break;
  }
  throw GenerationError(GenerationError::Kind::kTransport, request.image.id,
                        last_error + " (after " +
                            std::to_string(attempts) +
                            " attempt(s) to " + host_ + path_ + ")");
}

}  // namespace cir
