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

#include "cir/encoder/tape.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cir/core/errors.hpp"

namespace cir {

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(op) + ": shape mismatch " +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }
}

}  // namespace

Var Tape::push(Mat value) {
  Node& n = nodes_.emplace_back();
  n.own_value = std::move(value);
  n.value_ptr = &n.own_value;
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Mat& Tape::grad(Var v) {
  Node& n = nodes_[v.id];
  if (!n.grad_ptr) {
    n.own_grad = Mat::Zero(n.value_ptr->rows(), n.value_ptr->cols());
    n.grad_ptr = &n.own_grad;
  }
  return *n.grad_ptr;
}

void Tape::on_backward(Var out, std::span<const Var> inputs,
                       std::function<void()> fn) {
  if (!record_) return;
  bool any = false;
  for (Var v : inputs) any = any || needs(v);
  if (!any) return;
  nodes_[out.id].requires_grad = true;
  nodes_[out.id].backward = std::move(fn);
}

void Tape::on_backward(Var out, std::initializer_list<Var> inputs,
                       std::function<void()> fn) {
  on_backward(out, std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(fn));
}

Var Tape::constant(Mat value) { return push(std::move(value)); }

Var Tape::bind(const Mat& value, Mat* grad_sink) {
  Node& n = nodes_.emplace_back();
  n.value_ptr = &value;
  if (grad_sink && record_) {
    require_same_shape(value, *grad_sink, "bind");
    n.grad_ptr = grad_sink;
    n.requires_grad = true;
  }
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::backward(Var out) {
  if (!record_) throw ValidationError("backward on a non-recording tape");
  const Mat& v = value(out);
  if (v.rows() != 1 || v.cols() != 1) {
    throw ValidationError("backward requires a scalar output");
  }
  grad(out)(0, 0) += 1.0;
  for (std::int64_t i = out.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward && n.grad_ptr) n.backward();
  }
}

Var Tape::matmul(Var a, Var b) {
  const Mat& av = value(a);
  const Mat& bv = value(b);
  if (av.cols() != bv.rows()) {
    throw ValidationError("matmul: inner dimensions " +
                          std::to_string(av.cols()) + " and " +
                          std::to_string(bv.rows()) + " differ");
  }
  Var out = push(av * bv);
  on_backward(out, {a, b}, [this, a, b, out] {
    const Mat& g = grad(out);
    if (needs(a)) grad(a).noalias() += g * value(b).transpose();
    if (needs(b)) grad(b).noalias() += value(a).transpose() * g;
  });
  return out;
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Var out = push(value(a) + value(b));
  on_backward(out, {a, b}, [this, a, b, out] {
    if (needs(a)) grad(a) += grad(out);
    if (needs(b)) grad(b) += grad(out);
  });
  return out;
}

Var Tape::add_row(Var a, Var row) {
  const Mat& av = value(a);
  const Mat& rv = value(row);
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ValidationError("add_row: bias must be 1 x " +
                          std::to_string(av.cols()));
  }
  Mat out_v = av;
  out_v.rowwise() += rv.row(0);
  Var out = push(std::move(out_v));
  on_backward(out, {a, row}, [this, a, row, out] {
    if (needs(a)) grad(a) += grad(out);
    if (needs(row)) grad(row) += grad(out).colwise().sum();
  });
  return out;
}

Var Tape::scale(Var a, double s) {
  Var out = push(value(a) * s);
  on_backward(out, {a}, [this, a, s, out] { grad(a) += grad(out) * s; });
  return out;
}

Var Tape::layer_norm(Var x, Var gain, Var shift, double eps) {
  const Mat& xv = value(x);
  const Mat& gv = value(gain);
  const Mat& bv = value(shift);
  const auto n = xv.rows();
  const auto d = xv.cols();
  if (gv.rows() != 1 || gv.cols() != d || bv.rows() != 1 || bv.cols() != d) {
    throw ValidationError("layer_norm: gain/shift must be 1 x " +
                          std::to_string(d));
  }
  Mat xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Mat y = xhat;
  y.array().rowwise() *= gv.row(0).array();
  y.rowwise() += bv.row(0);
  Var out = push(std::move(y));
  if (record_) {
    on_backward(out, {x, gain, shift}, [this, x, gain, shift, out, xhat = std::move(xhat),
                      inv_std = std::move(inv_std)] {
      const Mat& g = grad(out);
      const Mat& gv = value(gain);
      if (needs(gain)) {
        grad(gain) += (g.array() * xhat.array()).colwise().sum().matrix();
      }
      if (needs(shift)) grad(shift) += g.colwise().sum();
      if (!needs(x)) return;
      Mat dxhat = g;
      dxhat.array().rowwise() *= gv.row(0).array();
      Mat& gx = grad(x);
      for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
        const double m1 = dxhat.row(r).mean();
        const double m2 = dxhat.row(r).dot(xhat.row(r)) /
                          static_cast<double>(dxhat.cols());
        gx.row(r).array() +=
            inv_std(r) *
            (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
      }
    });
  }
  return out;
}

Var Tape::gelu(Var x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double kA = 0.044715;
  const Mat& xv = value(x);
  Mat y(xv.rows(), xv.cols());
  Mat dy(record_ ? xv.rows() : 0, record_ ? xv.cols() : 0);
  for (Eigen::Index i = 0; i < xv.size(); ++i) {
    const double v = xv.data()[i];
    const double t = std::tanh(kC * (v + kA * v * v * v));
    y.data()[i] = 0.5 * v * (1.0 + t);
    if (record_) {
      dy.data()[i] = 0.5 * (1.0 + t) +
                     0.5 * v * (1.0 - t * t) * kC * (1.0 + 3.0 * kA * v * v);
    }
  }
  Var out = push(std::move(y));
  on_backward(out, {x}, [this, x, out, dy = std::move(dy)] {
    grad(x).array() += grad(out).array() * dy.array();
  });
  return out;
}

Var Tape::attention(Var q, Var k, Var v, int heads) {
  const Mat& qv = value(q);
  const Mat& kv = value(k);
  const Mat& vv = value(v);
  const auto d = qv.cols();
  if (kv.cols() != d || vv.cols() != d || kv.rows() != vv.rows() ||
      kv.rows() == 0) {
    throw ValidationError("attention: inconsistent q/k/v shapes");
  }
  if (heads < 1 || d % heads != 0) {
    throw ValidationError("attention: heads must divide the model dimension");
  }
  const auto dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat o(qv.rows(), d);
  std::vector<Mat> probs(heads);
  for (int h = 0; h < heads; ++h) {
    Mat s = (qv.middleCols(h * dh, dh) * kv.middleCols(h * dh, dh).transpose()) *
            scale;
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      const double mx = s.row(r).maxCoeff();
      s.row(r) = (s.row(r).array() - mx).exp();
      s.row(r) /= s.row(r).sum();
    }
    o.middleCols(h * dh, dh).noalias() = s * vv.middleCols(h * dh, dh);
    probs[h] = std::move(s);
  }
  Var out = push(std::move(o));
  if (record_) {
    on_backward(out, {q, k, v}, [this, q, k, v, out, heads, dh, scale,
                      probs = std::move(probs)] {
      const Mat& g = grad(out);
      const Mat& qv = value(q);
      const Mat& kv = value(k);
      const Mat& vv = value(v);
      const bool nq = needs(q), nk = needs(k), nv = needs(v);
      for (int h = 0; h < heads; ++h) {
        const Mat& p = probs[h];
        const auto gh = g.middleCols(h * dh, dh);
        if (nv) grad(v).middleCols(h * dh, dh).noalias() += p.transpose() * gh;
        if (!nq && !nk) continue;
        Mat dp = gh * vv.middleCols(h * dh, dh).transpose();
        // Softmax Jacobian-vector product, row by row.
        Mat ds(p.rows(), p.cols());
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
          const double dot = dp.row(r).dot(p.row(r));
          ds.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
        }
        ds *= scale;
        if (nq) {
          grad(q).middleCols(h * dh, dh).noalias() +=
              ds * kv.middleCols(h * dh, dh);
        }
        if (nk) {
          grad(k).middleCols(h * dh, dh).noalias() +=
              ds.transpose() * qv.middleCols(h * dh, dh);
        }
      }
    });
  }
  return out;
}

Var Tape::concat_rows(Var top, Var bottom) {
  const Mat& t = value(top);
  const Mat& b = value(bottom);
  if (t.cols() != b.cols()) {
    throw ValidationError("concat_rows: column counts differ");
  }
  Mat o(t.rows() + b.rows(), t.cols());
  o.topRows(t.rows()) = t;
  o.bottomRows(b.rows()) = b;
  const auto nt = t.rows();
  const auto nb = b.rows();
  Var out = push(std::move(o));
  on_backward(out, {top, bottom}, [this, top, bottom, out, nt, nb] {
    if (needs(top)) grad(top) += grad(out).topRows(nt);
    if (needs(bottom)) grad(bottom) += grad(out).bottomRows(nb);
  });
  return out;
}

Var Tape::slice_rows(Var a, std::int64_t start, std::int64_t count) {
  const Mat& av = value(a);
  if (start < 0 || count < 0 || start + count > av.rows()) {
    throw ValidationError("slice_rows: range out of bounds");
  }
  Var out = push(av.middleRows(start, count));
  on_backward(out, {a}, [this, a, start, count, out] {
    grad(a).middleRows(start, count) += grad(out);
  });
  return out;
}

Var Tape::gather_rows(Var table, std::span<const std::uint32_t> ids) {
  const Mat& tv = value(table);
  Mat o(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= static_cast<std::uint64_t>(tv.rows())) {
      throw ValidationError("gather_rows: id " + std::to_string(ids[i]) +
                            " out of range");
    }
    o.row(static_cast<Eigen::Index>(i)) = tv.row(ids[i]);
  }
  Var out = push(std::move(o));
  if (record_) {
    std::vector<std::uint32_t> idv(ids.begin(), ids.end());
    on_backward(out, {table}, [this, table, out, idv = std::move(idv)] {
      const Mat& g = grad(out);
      Mat& gt = grad(table);
      for (std::size_t i = 0; i < idv.size(); ++i) {
        gt.row(idv[i]) += g.row(static_cast<Eigen::Index>(i));
      }
    });
  }
  return out;
}

namespace {

// Row-normalized copy plus the original row norms.
std::pair<Mat, Eigen::VectorXd> normalize_rows(const Mat& m) {
  Eigen::VectorXd norms = m.rowwise().norm();
  Mat unit = m;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (!(norms(r) >= 1e-12)) {
      throw ValidationError("maxsim: row " + std::to_string(r) +
                            " has near-zero norm");
    }
    unit.row(r) /= norms(r);
  }
  return {std::move(unit), std::move(norms)};
}

}  // namespace

Var Tape::maxsim_matrix(std::span<const Var> lhs, std::span<const Var> rhs) {
  if (lhs.empty() || rhs.empty()) {
    throw ValidationError("maxsim_matrix: empty side");
  }
  const auto n = static_cast<Eigen::Index>(lhs.size());
  const auto m = static_cast<Eigen::Index>(rhs.size());
  std::vector<Mat> lu(lhs.size()), ru(rhs.size());
  std::vector<Eigen::VectorXd> ln(lhs.size()), rn(rhs.size());
  const auto d = value(lhs[0]).cols();
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    if (value(lhs[i]).cols() != d || value(lhs[i]).rows() == 0) {
      throw ValidationError("maxsim_matrix: inconsistent lhs shapes");
    }
    std::tie(lu[i], ln[i]) = normalize_rows(value(lhs[i]));
  }
  for (std::size_t j = 0; j < rhs.size(); ++j) {
    if (value(rhs[j]).cols() != d || value(rhs[j]).rows() == 0) {
      throw ValidationError("maxsim_matrix: inconsistent rhs shapes");
    }
    std::tie(ru[j], rn[j]) = normalize_rows(value(rhs[j]));
  }
  Mat s(n, m);
  // argmax[i * m + j][z] = best rhs row for lhs row z; cos alongside.
  std::vector<std::vector<std::pair<Eigen::Index, double>>> best(
      record_ ? lhs.size() * rhs.size() : 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const Mat c = lu[i] * ru[j].transpose();
      double total = 0.0;
      std::vector<std::pair<Eigen::Index, double>> pick(record_ ? c.rows() : 0);
      for (Eigen::Index z = 0; z < c.rows(); ++z) {
        Eigen::Index arg = 0;
        double mx = c(z, 0);
        for (Eigen::Index r = 1; r < c.cols(); ++r) {
          if (c(z, r) > mx) {
            mx = c(z, r);
            arg = r;
          }
        }
        total += mx;
        if (record_) pick[z] = {arg, mx};
      }
      s(i, j) = total / static_cast<double>(c.rows());
      if (record_) best[i * m + j] = std::move(pick);
    }
  }
  Var out = push(std::move(s));
  if (record_) {
    std::vector<Var> lv(lhs.begin(), lhs.end());
    std::vector<Var> rv(rhs.begin(), rhs.end());
    std::vector<Var> inputs(lhs.begin(), lhs.end());
    inputs.insert(inputs.end(), rhs.begin(), rhs.end());
    on_backward(out, inputs, [this, out, n, m, lv = std::move(lv), rv = std::move(rv),
                      lu = std::move(lu), ru = std::move(ru),
                      ln = std::move(ln), rn = std::move(rn),
                      best = std::move(best)] {
      const Mat& g = grad(out);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
          const double gij = g(i, j);
          if (gij == 0.0) continue;
          const auto& pick = best[i * m + j];
          const double w = gij / static_cast<double>(pick.size());
          const bool na = needs(lv[i]), nb = needs(rv[j]);
          for (std::size_t z = 0; z < pick.size(); ++z) {
            const auto [r, c] = pick[z];
            const auto zi = static_cast<Eigen::Index>(z);
            if (na) {
              grad(lv[i]).row(zi) +=
                  (w / ln[i](zi)) * (ru[j].row(r) - c * lu[i].row(zi));
            }
            if (nb) {
              grad(rv[j]).row(r) +=
                  (w / rn[j](r)) * (lu[i].row(zi) - c * ru[j].row(r));
            }
          }
        }
      }
    });
  }
  return out;
}

Var Tape::info_nce(Var sim, double tau) {
  const Mat& sv = value(sim);
  const auto n = sv.rows();
  if (sv.cols() != n) throw ValidationError("info_nce: matrix must be square");
  if (n < 2) throw ValidationError("info_nce: needs at least two rows");
  if (!(tau > 0.0)) throw ValidationError("info_nce: tau must be positive");
  Mat p(n, n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd z = sv.row(i) / tau;
    if (!z.allFinite()) throw DivergenceError("info_nce: non-finite entry");
    const double mx = z.maxCoeff();
    const Eigen::RowVectorXd e = (z.array() - mx).exp();
    const double sum = e.sum();
    loss += (mx + std::log(sum)) - z(i);
    p.row(i) = e / sum;
  }
  loss /= static_cast<double>(n);
  Mat out_v(1, 1);
  out_v(0, 0) = loss;
  Var out = push(std::move(out_v));
  if (record_) {
    on_backward(out, {sim}, [this, sim, out, n, tau, p = std::move(p)] {
      const double g = grad(out)(0, 0) / (static_cast<double>(n) * tau);
      Mat d = p;
      d.diagonal().array() -= 1.0;
      grad(sim) += g * d;
    });
  }
  return out;
}

}  // namespace cir
