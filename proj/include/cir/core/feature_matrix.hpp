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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cir {

// Row-major k x d block of token features stored as 32-bit floats, the
// precision they are persisted with. Construction does not validate so that
// invalid inputs can be represented and rejected at API boundaries; call
// validate() (or is_valid()) where the invariants matter.
class FeatureMatrix {
 public:
  // Rows with a smaller Euclidean norm cannot be cosine-normalized.
  static constexpr double kMinRowNorm = 1e-12;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t dim);
  FeatureMatrix(std::size_t rows, std::size_t dim, std::vector<float> data);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return rows_ == 0; }

  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }
  std::span<const float> row(std::size_t r) const {
    return std::span<const float>(data_).subspan(r * dim_, dim_);
  }
  float operator()(std::size_t r, std::size_t c) const {
    return data_[r * dim_ + c];
  }
  float& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }

  // Throws ValidationError naming `what` when rows/dim are zero, an entry is
  // non-finite, or a row norm falls below kMinRowNorm.
  void validate(const std::string& what = "feature matrix") const;
  bool is_valid() const;

  bool operator==(const FeatureMatrix& other) const;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

}  // namespace cir
