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

#include "cir/core/feature_matrix.hpp"

#include <cmath>
#include <cstring>

#include "cir/core/errors.hpp"

namespace cir {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), data_(rows * dim, 0.0f) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dim,
                             std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (data_.size() != rows_ * dim_) {
    throw ValidationError("feature matrix: data length " +
                          std::to_string(data_.size()) + " != rows*dim " +
                          std::to_string(rows_ * dim_));
  }
}

void FeatureMatrix::validate(const std::string& what) const {
  if (rows_ == 0 || dim_ == 0) {
    throw ValidationError(what + ": empty matrix (" + std::to_string(rows_) +
                          "x" + std::to_string(dim_) + ")");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    double sq = 0.0;
    for (float v : row(r)) {
      if (!std::isfinite(v)) {
        throw ValidationError(what + ": non-finite entry in row " +
                              std::to_string(r));
      }
      sq += static_cast<double>(v) * v;
    }
    if (std::sqrt(sq) < kMinRowNorm) {
      throw ValidationError(what + ": row " + std::to_string(r) +
                            " has near-zero norm");
    }
  }
}

bool FeatureMatrix::is_valid() const {
  try {
    validate();
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

bool FeatureMatrix::operator==(const FeatureMatrix& other) const {
  // Bitwise comparison: round-trips must preserve every float exactly,
  // including the sign of zero.
  return rows_ == other.rows_ && dim_ == other.dim_ &&
         (data_.empty() ||
          std::memcmp(data_.data(), other.data_.data(),
                      data_.size() * sizeof(float)) == 0);
}

}  // namespace cir
