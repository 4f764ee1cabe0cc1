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

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cir {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Handle to a node on a Tape.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Minimal reverse-mode differentiation over dense matrices. Each op appends
// a node holding its forward value and, when recording, a closure that
// pushes the node's gradient to its inputs. Parameters enter as bound
// leaves: the tape reads their storage in place and accumulates gradients
// straight into a caller-owned sink, so large tables are never copied.
//
// A tape built with record = false evaluates the identical arithmetic
// without keeping closures; inference and finite-difference probes use it.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Mat value);
  // `value` must outlive the tape. `grad_sink`, when given, must already be
  // sized like `value`; gradients are added to it during backward().
  Var bind(const Mat& value, Mat* grad_sink);

  const Mat& value(Var v) const { return *nodes_[v.id].value_ptr; }
  double scalar(Var v) const { return value(v)(0, 0); }

  // Seeds d(out)/d(out) = 1 for a 1x1 node and runs every recorded closure
  // in reverse order.
  void backward(Var out);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);  // broadcasts a 1 x n row over a's rows
  Var scale(Var a, double s);
  Var layer_norm(Var x, Var gain, Var shift, double eps = 1e-5);
  Var gelu(Var x);
  // Multi-head scaled dot-product attention. q: n_q x d, k/v: n_k x d; the
  // model dimension is split into `heads` contiguous column groups.
  Var attention(Var q, Var k, Var v, int heads);
  Var concat_rows(Var top, Var bottom);
  Var slice_rows(Var a, std::int64_t start, std::int64_t count);
  Var gather_rows(Var table, std::span<const std::uint32_t> ids);
  // Entry (i, j) is the late-interaction score of lhs[i] against rhs[j]:
  // mean over lhs rows of the best cosine against any rhs row. Max ties go
  // to the first row index.
  Var maxsim_matrix(std::span<const Var> lhs, std::span<const Var> rhs);
  // Mean over rows of -log softmax(row / tau)[diagonal]. Returns 1 x 1.
  Var info_nce(Var sim, double tau);

 private:
  struct Node {
    Mat own_value;
    const Mat* value_ptr = nullptr;
    Mat own_grad;
    Mat* grad_ptr = nullptr;
    std::function<void()> backward;
    bool requires_grad = false;
  };

  Var push(Mat value);
  // Gradient buffer of v, allocated as zeros on first use.
  Mat& grad(Var v);
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  // Stores `fn` only when recording and some input requires a gradient.
  void on_backward(Var out, std::span<const Var> inputs,
                   std::function<void()> fn);
  void on_backward(Var out, std::initializer_list<Var> inputs,
                   std::function<void()> fn);

  bool record_;
  // Nodes point at their own value/grad members; a deque keeps those
  // addresses stable as the tape grows.
  std::deque<Node> nodes_;
};

}  // namespace cir
