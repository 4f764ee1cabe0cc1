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

#include "cir/similarity/similarity.hpp"

#include <cmath>
#include <string>

#include "cir/core/errors.hpp"
#include "cir/core/parallel.hpp"

namespace cir {

namespace {

struct UnitRows {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> data;
};

UnitRows normalize(const FeatureMatrix& m, const char* side) {
  if (m.rows() == 0 || m.dim() == 0) {
    throw ValidationError(std::string("maxsim: empty ") + side + " matrix");
  }
  UnitRows u{m.rows(), m.dim(), std::vector<double>(m.rows() * m.dim())};
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double sq = 0.0;
    for (float v : row) {
      if (!std::isfinite(v)) {
        throw ValidationError(std::string("maxsim: non-finite entry in ") +
                              side);
      }
      sq += static_cast<double>(v) * v;
    }
    const double norm = std::sqrt(sq);
    if (norm < FeatureMatrix::kMinRowNorm) {
      throw ValidationError(std::string("maxsim: near-zero-norm row ") +
                            std::to_string(r) + " in " + side);
    }
    for (std::size_t c = 0; c < m.dim(); ++c) {
      u.data[r * m.dim() + c] = row[c] / norm;
    }
  }
  return u;
}

double score(const UnitRows& a, const UnitRows& b) {
  if (a.dim != b.dim) {
    throw ValidationError("maxsim: dimension mismatch " +
                          std::to_string(a.dim) + " vs " +
                          std::to_string(b.dim));
  }
  double total = 0.0;
  for (std::size_t z = 0; z < a.rows; ++z) {
    const double* az = a.data.data() + z * a.dim;
    double best = -INFINITY;
    for (std::size_t r = 0; r < b.rows; ++r) {
      const double* br = b.data.data() + r * b.dim;
      double dot = 0.0;
      for (std::size_t c = 0; c < a.dim; ++c) dot += az[c] * br[c];
      best = std::max(best, dot);
    }
    total += best;
  }
  return total / static_cast<double>(a.rows);
}

}  // namespace

double maxsim(const FeatureMatrix& a, const FeatureMatrix& b) {
  return score(normalize(a, "lhs"), normalize(b, "rhs"));
}

Mat similarity_matrix(std::span<const FeatureMatrix> queries,
                      std::span<const FeatureMatrix> targets,
                      std::size_t threads) {
  if (queries.empty() || targets.empty()) {
    throw ValidationError("similarity_matrix: empty query or target list");
  }
  std::vector<UnitRows> q(queries.size()), t(targets.size());
  parallel_for(queries.size(), threads,
               [&](std::size_t i) { q[i] = normalize(queries[i], "lhs"); });
  parallel_for(targets.size(), threads,
               [&](std::size_t j) { t[j] = normalize(targets[j], "rhs"); });
  Mat out(static_cast<Eigen::Index>(q.size()),
          static_cast<Eigen::Index>(t.size()));
  parallel_for(q.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          score(q[i], t[j]);
    }
  });
  return out;
}

double fuse(double s_hat, double s_tilde) {
  if (!std::isfinite(s_hat) || !std::isfinite(s_tilde)) {
    throw ValidationError("fuse: non-finite score");
  }
  return 0.5 * (s_hat + s_tilde);
}

}  // namespace cir
