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

#include <span>
#include <vector>

#include "cir/core/feature_matrix.hpp"
#include "cir/encoder/tape.hpp"

namespace cir {

// Late-interaction score: (1/k_a) * sum_z max_r cos(a_z, b_r). Lies in
// [-1, 1]. Asymmetric in general. Throws ValidationError on empty inputs,
// dimension mismatch or rows with norm below 1e-12.
double maxsim(const FeatureMatrix& a, const FeatureMatrix& b);

// Entry (i, j) = maxsim(queries[i], targets[j]). Rows are normalized once per
// matrix; every cell uses the same reduction order as maxsim, so the result
// does not depend on `threads`.
Mat similarity_matrix(std::span<const FeatureMatrix> queries,
                      std::span<const FeatureMatrix> targets,
                      std::size_t threads = 1);

// Arithmetic mean of the composed-query and generated-text scores.
double fuse(double s_hat, double s_tilde);

}  // namespace cir
