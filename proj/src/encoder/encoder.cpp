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

#include "cir/encoder/encoder.hpp"

#include <cmath>
#include <cstring>

#include "cir/core/errors.hpp"
#include "cir/core/rng.hpp"

namespace cir {

void EncoderConfig::validate() const {
  if (k < 1) throw ValidationError("encoder config: k must be >= 1");
  if (d < 8) throw ValidationError("encoder config: d must be >= 8");
  if (heads < 1 || d % heads != 0) {
    throw ValidationError("encoder config: heads must divide d");
  }
  if (blocks < 1) throw ValidationError("encoder config: blocks must be >= 1");
  if (vocab < 1) throw ValidationError("encoder config: vocab must be >= 1");
  if (image_dim < 1) {
    throw ValidationError("encoder config: image_dim must be >= 1");
  }
  if (max_text_len < 1) {
    throw ValidationError("encoder config: max_text_len must be >= 1");
  }
}

namespace {

template <typename P, typename F>
void visit(P& p, F&& fn) {
  fn("query_tokens", p.query_tokens);
  fn("text_embed", p.text_embed);
  fn("text_pos", p.text_pos);
  if (p.config.projects_image()) fn("image_proj", p.image_proj);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    auto& blk = p.blocks[b];
    const std::string pre = "blocks." + std::to_string(b) + ".";
    fn(pre + "ln1_gain", blk.ln1_gain);
    fn(pre + "ln1_shift", blk.ln1_shift);
    fn(pre + "self_wq", blk.self_wq);
    fn(pre + "self_wk", blk.self_wk);
    fn(pre + "self_wv", blk.self_wv);
    fn(pre + "self_wo", blk.self_wo);
    fn(pre + "ln2_gain", blk.ln2_gain);
    fn(pre + "ln2_shift", blk.ln2_shift);
    fn(pre + "cross_wq", blk.cross_wq);
    fn(pre + "cross_wk", blk.cross_wk);
    fn(pre + "cross_wv", blk.cross_wv);
    fn(pre + "cross_wo", blk.cross_wo);
    fn(pre + "ln3_gain", blk.ln3_gain);
    fn(pre + "ln3_shift", blk.ln3_shift);
    fn(pre + "mlp_w1", blk.mlp_w1);
    fn(pre + "mlp_b1", blk.mlp_b1);
    fn(pre + "mlp_w2", blk.mlp_w2);
    fn(pre + "mlp_b2", blk.mlp_b2);
  }
  fn("final_gain", p.final_gain);
  fn("final_shift", p.final_shift);
}

bool is_gain(const std::string& name) {
  return name.ends_with("_gain");
}

bool is_shift_or_bias(const std::string& name) {
  return name.ends_with("_shift") || name.ends_with("_b1") ||
         name.ends_with("_b2");
}

}  // namespace

void EncoderParams::for_each(
    const std::function<void(const std::string&, Mat&)>& fn) {
  visit(*this, fn);
}

void EncoderParams::for_each(
    const std::function<void(const std::string&, const Mat&)>& fn) const {
  visit(*this, fn);
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Mat& m) { n += m.size(); });
  return n;
}

void EncoderParams::validate() const {
  config.validate();
  const EncoderParams ref = zeros_like(config);
  std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>>
      shapes;
  ref.for_each([&](const std::string& name, const Mat& m) {
    shapes.push_back({name, {m.rows(), m.cols()}});
  });
  if (blocks.size() != config.blocks) {
    throw ValidationError("encoder params: block count mismatch");
  }
  std::size_t i = 0;
  for_each([&](const std::string& name, const Mat& m) {
    const auto& [rows, cols] = shapes[i++].second;
    if (m.rows() != rows || m.cols() != cols) {
      throw ValidationError("encoder params: '" + name + "' has shape " +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", expected " +
                            std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (!m.allFinite()) {
      throw ValidationError("encoder params: '" + name +
                            "' has non-finite entries");
    }
  });
}

bool EncoderParams::operator==(const EncoderParams& other) const {
  if (!(config == other.config) || blocks.size() != other.blocks.size()) {
    return false;
  }
  std::vector<const Mat*> mine;
  for_each([&](const std::string&, const Mat& m) { mine.push_back(&m); });
  bool equal = true;
  std::size_t i = 0;
  other.for_each([&](const std::string&, const Mat& m) {
    const Mat& a = *mine[i++];
    equal = equal && a.rows() == m.rows() && a.cols() == m.cols() &&
            (a.size() == 0 ||
             std::memcmp(a.data(), m.data(), sizeof(double) * a.size()) == 0);
  });
  return equal;
}

EncoderParams zeros_like(const EncoderConfig& c) {
  c.validate();
  const Eigen::Index d = c.d;
  EncoderParams p;
  p.config = c;
  p.query_tokens = Mat::Zero(c.k, d);
  p.text_embed = Mat::Zero(c.vocab, d);
  p.text_pos = Mat::Zero(c.max_text_len, d);
  if (c.projects_image()) p.image_proj = Mat::Zero(c.image_dim, d);
  p.blocks.resize(c.blocks);
  for (auto& b : p.blocks) {
    for (Mat* m : {&b.ln1_gain, &b.ln1_shift, &b.ln2_gain, &b.ln2_shift,
                   &b.ln3_gain, &b.ln3_shift, &b.mlp_b2}) {
      *m = Mat::Zero(1, d);
    }
    for (Mat* m : {&b.self_wq, &b.self_wk, &b.self_wv, &b.self_wo, &b.cross_wq,
                   &b.cross_wk, &b.cross_wv, &b.cross_wo}) {
      *m = Mat::Zero(d, d);
    }
    b.mlp_w1 = Mat::Zero(d, 4 * d);
    b.mlp_b1 = Mat::Zero(1, 4 * d);
    b.mlp_w2 = Mat::Zero(4 * d, d);
  }
  p.final_gain = Mat::Zero(1, d);
  p.final_shift = Mat::Zero(1, d);
  return p;
}

EncoderParams zeros_like(const EncoderParams& params) {
  return zeros_like(params.config);
}

EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  EncoderParams p = zeros_like(config);
  Rng rng(mix_seed(seed, 0x1417));
  p.for_each([&](const std::string& name, Mat& m) {
    if (is_gain(name)) {
      m.setOnes();
    } else if (!is_shift_or_bias(name)) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = kInitStd * rng.normal();
      }
    }
  });
  round_to_float(p);
  return p;
}

EncoderParams random_params(const EncoderConfig& config, std::uint64_t seed,
                            double scale) {
  EncoderParams p = zeros_like(config);
  Rng rng(mix_seed(seed, 0x7A2D));
  p.for_each([&](const std::string& name, Mat& m) {
    const double base = is_gain(name) ? 1.0 : 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = base + scale * rng.normal();
    }
  });
  round_to_float(p);
  return p;
}

void round_to_float(EncoderParams& params) {
  params.for_each([](const std::string&, Mat& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
    }
  });
}

Mat to_mat(const FeatureMatrix& f) {
  Mat m(f.rows(), f.dim());
  const auto data = f.data();
  for (std::size_t i = 0; i < data.size(); ++i) m.data()[i] = data[i];
  return m;
}

FeatureMatrix to_feature_matrix(const Mat& m) {
  std::vector<float> data(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    data[i] = static_cast<float>(m.data()[i]);
  }
  return FeatureMatrix(m.rows(), m.cols(), std::move(data));
}

EncoderGraph::EncoderGraph(Tape& tape, const EncoderParams& params,
                           EncoderParams* grads)
    : tape_(tape), params_(params) {
  params.config.validate();
  if (grads && !(grads->config == params.config)) {
    throw ValidationError("gradient buffer config differs from params");
  }
  auto bind = [&](const Mat& value, Mat* grad) {
    return tape.bind(value, grads ? grad : nullptr);
  };
  query_tokens_ = bind(params.query_tokens, grads ? &grads->query_tokens : nullptr);
  text_embed_ = bind(params.text_embed, grads ? &grads->text_embed : nullptr);
  text_pos_ = bind(params.text_pos, grads ? &grads->text_pos : nullptr);
  if (params.config.projects_image()) {
    image_proj_ = bind(params.image_proj, grads ? &grads->image_proj : nullptr);
  }
  blocks_.reserve(params.blocks.size());
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    const EncoderBlock& p = params.blocks[b];
    EncoderBlock* g = grads ? &grads->blocks[b] : nullptr;
    auto gp = [&](Mat EncoderBlock::*member) {
      return g ? &(g->*member) : nullptr;
    };
    BlockVars v;
    v.ln1_gain = bind(p.ln1_gain, gp(&EncoderBlock::ln1_gain));
    v.ln1_shift = bind(p.ln1_shift, gp(&EncoderBlock::ln1_shift));
    v.self_wq = bind(p.self_wq, gp(&EncoderBlock::self_wq));
    v.self_wk = bind(p.self_wk, gp(&EncoderBlock::self_wk));
    v.self_wv = bind(p.self_wv, gp(&EncoderBlock::self_wv));
    v.self_wo = bind(p.self_wo, gp(&EncoderBlock::self_wo));
    v.ln2_gain = bind(p.ln2_gain, gp(&EncoderBlock::ln2_gain));
    v.ln2_shift = bind(p.ln2_shift, gp(&EncoderBlock::ln2_shift));
    v.cross_wq = bind(p.cross_wq, gp(&EncoderBlock::cross_wq));
    v.cross_wk = bind(p.cross_wk, gp(&EncoderBlock::cross_wk));
    v.cross_wv = bind(p.cross_wv, gp(&EncoderBlock::cross_wv));
    v.cross_wo = bind(p.cross_wo, gp(&EncoderBlock::cross_wo));
    v.ln3_gain = bind(p.ln3_gain, gp(&EncoderBlock::ln3_gain));
    v.ln3_shift = bind(p.ln3_shift, gp(&EncoderBlock::ln3_shift));
    v.mlp_w1 = bind(p.mlp_w1, gp(&EncoderBlock::mlp_w1));
    v.mlp_b1 = bind(p.mlp_b1, gp(&EncoderBlock::mlp_b1));
    v.mlp_w2 = bind(p.mlp_w2, gp(&EncoderBlock::mlp_w2));
    v.mlp_b2 = bind(p.mlp_b2, gp(&EncoderBlock::mlp_b2));
    blocks_.push_back(v);
  }
  final_gain_ = bind(params.final_gain, grads ? &grads->final_gain : nullptr);
  final_shift_ = bind(params.final_shift, grads ? &grads->final_shift : nullptr);
}

Var EncoderGraph::embed_text(const TokenSequence& text) {
  const auto& c = params_.config;
  if (text.ids.empty()) throw ValidationError("encode: empty token sequence");
  const std::size_t len =
      std::min<std::size_t>(text.ids.size(), c.max_text_len);
  std::span<const std::uint32_t> ids(text.ids.data(), len);
  for (auto id : ids) {
    if (id >= c.vocab) {
      throw ValidationError("encode: token id " + std::to_string(id) +
                            " outside vocab " + std::to_string(c.vocab));
    }
  }
  Var tokens = tape_.gather_rows(text_embed_, ids);
  Var pos = tape_.slice_rows(text_pos_, 0, static_cast<std::int64_t>(len));
  return tape_.add(tokens, pos);
}

Var EncoderGraph::project_image(const FeatureMatrix& image) {
  image.validate("encode image input");
  if (image.dim() != params_.config.image_dim) {
    throw ValidationError("encode: image tokens have dim " +
                          std::to_string(image.dim()) + ", encoder expects " +
                          std::to_string(params_.config.image_dim));
  }
  Var raw = tape_.constant(to_mat(image));
  return params_.config.projects_image() ? tape_.matmul(raw, image_proj_)
                                         : raw;
}

Var EncoderGraph::forward(const FeatureMatrix* image,
                          const TokenSequence* text) {
  const int heads = static_cast<int>(params_.config.heads);
  Var text_tokens = text ? embed_text(*text) : Var{};
  Var memory = image ? project_image(*image) : Var{};
  Var x = query_tokens_;
  for (const BlockVars& b : blocks_) {
    // Self-attention: the k query positions attend over [queries; text];
    // only the query positions are carried forward.
    Var h = tape_.layer_norm(x, b.ln1_gain, b.ln1_shift);
    Var context = h;
    if (text) {
      Var ht = tape_.layer_norm(text_tokens, b.ln1_gain, b.ln1_shift);
      context = tape_.concat_rows(h, ht);
    }
    Var sa = tape_.attention(tape_.matmul(h, b.self_wq),
                             tape_.matmul(context, b.self_wk),
                             tape_.matmul(context, b.self_wv), heads);
    x = tape_.add(x, tape_.matmul(sa, b.self_wo));

    if (image) {
      Var h2 = tape_.layer_norm(x, b.ln2_gain, b.ln2_shift);
      Var ca = tape_.attention(tape_.matmul(h2, b.cross_wq),
                               tape_.matmul(memory, b.cross_wk),
                               tape_.matmul(memory, b.cross_wv), heads);
      x = tape_.add(x, tape_.matmul(ca, b.cross_wo));
    }

    Var h3 = tape_.layer_norm(x, b.ln3_gain, b.ln3_shift);
    Var hidden = tape_.gelu(tape_.add_row(tape_.matmul(h3, b.mlp_w1), b.mlp_b1));
    x = tape_.add(x, tape_.add_row(tape_.matmul(hidden, b.mlp_w2), b.mlp_b2));
  }
  return tape_.layer_norm(x, final_gain_, final_shift_);
}

Var EncoderGraph::composed(const FeatureMatrix& image,
                           const TokenSequence& text) {
  return forward(&image, &text);
}

Var EncoderGraph::text(const TokenSequence& text) {
  return forward(nullptr, &text);
}

Var EncoderGraph::image(const FeatureMatrix& image) {
  return forward(&image, nullptr);
}

FeatureMatrix encode_composed(const FeatureMatrix& image,
                              const TokenSequence& text,
                              const EncoderParams& params) {
  Tape tape(false);
  EncoderGraph g(tape, params);
  return to_feature_matrix(tape.value(g.composed(image, text)));
}

FeatureMatrix encode_text(const TokenSequence& text,
                          const EncoderParams& params) {
  Tape tape(false);
  EncoderGraph g(tape, params);
  return to_feature_matrix(tape.value(g.text(text)));
}

FeatureMatrix encode_image(const FeatureMatrix& image,
                           const EncoderParams& params) {
  Tape tape(false);
  EncoderGraph g(tape, params);
  return to_feature_matrix(tape.value(g.image(image)));
}

}  // namespace cir
