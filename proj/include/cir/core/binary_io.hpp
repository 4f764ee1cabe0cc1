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

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cir/core/errors.hpp"

namespace cir {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

// Appends little-endian encodings to a byte buffer.
class ByteWriter {
 public:
  void put_bytes(std::string_view bytes) { buffer_.append(bytes); }

  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    auto bits = std::bit_cast<std::array<char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(bits.begin(), bits.end());
    }
    buffer_.append(bits.data(), bits.size());
  }

  void put_u32(std::uint32_t v) { put(v); }
  void put_u64(std::uint64_t v) { put(v); }
  void put_f32(float v) { put(v); }

  // u32 length prefix followed by the raw UTF-8 bytes.
  void put_string(std::string_view s) {
    if (s.size() > UINT32_MAX) throw ValidationError("string too long");
    put_u32(static_cast<std::uint32_t>(s.size()));
    put_bytes(s);
  }

  const std::string& bytes() const { return buffer_; }
  std::string take() { return std::move(buffer_); }

 private:
  std::string buffer_;
};

// Bounds-checked little-endian reader. Every read that would run past the
// end throws FormatError("truncated payload ...").
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  std::string_view get_bytes(std::size_t n, const char* what) {
    require(n, what);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  template <typename T>
  T get(const char* what) {
    require(sizeof(T), what);
    std::array<char, sizeof(T)> bits;
    std::memcpy(bits.data(), bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(bits.begin(), bits.end());
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::uint32_t get_u32(const char* what) { return get<std::uint32_t>(what); }
  std::uint64_t get_u64(const char* what) { return get<std::uint64_t>(what); }
  float get_f32(const char* what) { return get<float>(what); }

  std::string get_string(const char* what) {
    const auto n = get_u32(what);
    return std::string(get_bytes(n, what));
  }

 private:
  void require(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(std::string("truncated payload while reading ") + what);
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace cir
