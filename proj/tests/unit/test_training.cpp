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

#include <cmath>
#include <numeric>

#include "doctest.h"

#include "cir/core/errors.hpp"
#include "cir/core/rng.hpp"
#include "cir/corpus/synth.hpp"
#include "cir/curation/curate.hpp"
#include "cir/curation/template_generator.hpp"
#include "cir/encoder/checkpoint.hpp"
#include "cir/training/adamw.hpp"
#include "cir/training/grad_check.hpp"
#include "cir/training/trainer.hpp"
#include "oracles/oracles.hpp"

using namespace cir;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.k = 4;
  c.d = 16;
  c.blocks = 1;
  c.heads = 4;
  return c;
}

struct Fixture {
  std::vector<ImageRecord> images;
  std::vector<TripletRecord> triplets;
  std::vector<CaptionRecord> captions;
  TrainingSet set;

  Fixture(std::size_t n, std::uint64_t seed, const EncoderConfig& cfg) {
    SynthConfig sc;
    sc.images = n;
    sc.eval_cases = 0;
    images = synth_corpus(sc, seed).images;
    const TemplateGenerator gen(sc.families, seed);
    auto cur = curate_dataset(images, gen);
    triplets = std::move(cur.triplets);
    captions = std::move(cur.captions);
    set = build_training_set(images, triplets, captions, cfg);
  }
};

oracle::Rows rows_of(const Mat& m) {
  oracle::Rows out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

}  // namespace

TEST_CASE("info_nce closed forms") {
  for (int n : {2, 5, 16}) {
    CHECK(info_nce(Mat::Constant(n, n, 0.3), 0.07) ==
          doctest::Approx(std::log(n)).epsilon(1e-12));
  }
  CHECK(std::abs(info_nce(Mat::Identity(2, 2), 1.0) - 0.313262) < 1e-6);
  CHECK(info_nce(Mat::Identity(2, 2), 1.0) ==
        doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("info_nce agrees with an unshifted oracle and is nonnegative") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(8));
    Mat s(n, n);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = 2 * rng.uniform() - 1;
    const double tau = 0.05 + rng.uniform();
    const double v = info_nce(s, tau);
    CHECK(v >= 0.0);
    CHECK(v == doctest::Approx(oracle::info_nce(rows_of(s), tau)).epsilon(1e-9));
    // Adding a constant to one row leaves the loss unchanged.
    Mat shifted = s;
    shifted.row(0).array() += 0.37;
    CHECK(info_nce(shifted, tau) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("info_nce approaches 0 with a saturated diagonal") {
  Mat s = Mat::Constant(4, 4, -1.0);
  s.diagonal().setOnes();
  const double v = info_nce(s, 0.01);
  CHECK(v >= 0.0);
  CHECK(v < 1e-80);
}

TEST_CASE("info_nce input errors") {
  CHECK_THROWS_AS(info_nce(Mat::Identity(1, 1), 1.0), ValidationError);
  CHECK_THROWS_AS(info_nce(Mat::Identity(3, 3), 0.0), ValidationError);
  CHECK_THROWS_AS(info_nce(Mat::Zero(2, 3), 1.0), ValidationError);
  Mat bad = Mat::Identity(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(info_nce(bad, 1.0), ValidationError);
}

TEST_CASE("batch loss is the sum of both terms and finite at init") {
  const auto cfg = small_config();
  const Fixture fx(8, 1, cfg);
  const auto params = init_params(cfg, 1);
  const auto parts = batch_loss(fx.set.triplets, fx.set.captions, params, 0.07);
  CHECK(parts.loss_t >= 0.0);
  CHECK(parts.loss_c >= 0.0);
  CHECK(std::isfinite(parts.total));
  CHECK(parts.total == parts.loss_t + parts.loss_c);

  const auto only_c = batch_loss(fx.set.triplets, fx.set.captions, params, 0.07,
                                 LossWeights{0.0, 1.0});
  CHECK(only_c.loss_t == 0.0);
  CHECK(only_c.total == parts.loss_c);
  const auto only_t = batch_loss(fx.set.triplets, fx.set.captions, params, 0.07,
                                 LossWeights{1.0, 0.0});
  CHECK(only_t.loss_c == 0.0);
  CHECK(only_t.total == parts.loss_t);
}

TEST_CASE("batch loss is invariant to a shared permutation of the batch") {
  const auto cfg = small_config();
  const Fixture fx(6, 2, cfg);
  const auto params = random_params(cfg, 2);
  auto t = fx.set.triplets;
  auto c = fx.set.captions;
  const double base = batch_loss(t, c, params, 0.07).total;
  std::reverse(t.begin(), t.end());
  std::rotate(c.begin(), c.begin() + 2, c.end());
  CHECK(batch_loss(t, c, params, 0.07).total == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("batch loss input errors") {
  const auto cfg = small_config();
  const Fixture fx(4, 3, cfg);
  const auto params = init_params(cfg, 1);
  CHECK_THROWS_AS(batch_loss(std::span(fx.set.triplets).first(1), fx.set.captions,
                             params, 0.07),
                  ValidationError);
  CHECK_THROWS_AS(build_training_set(fx.images, {{"nope", "m", "t"}}, fx.captions, cfg),
                  ValidationError);
}

TEST_CASE("gradient check on random small configurations") {
  const auto cfg = small_config();
  for (std::uint64_t run = 0; run < 3; ++run) {
    const Fixture fx(4, 10 + run, cfg);
    const auto params = random_params(cfg, run);
    GradCheckOptions o;
    o.seed = run;
    const auto rep = grad_check(params, fx.set.triplets, fx.set.captions, o);
    CHECK(rep.samples.size() == 50);
    CHECK(rep.max_rel_error < 1e-4);
    // Halving the step: truncation error is second order, so the error
    // should not blow up.
    o.eps = 5e-5;
    const auto half = grad_check(params, fx.set.triplets, fx.set.captions, o);
    CHECK(half.max_rel_error <= 4.0 * std::max(rep.max_rel_error, 1e-9));
  }
}

TEST_CASE("gradient check samples coordinates deterministically") {
  const auto cfg = small_config();
  const Fixture fx(4, 5, cfg);
  const auto params = random_params(cfg, 5);
  GradCheckOptions o;
  o.samples = 10;
  o.seed = 77;
  const auto a = grad_check(params, fx.set.triplets, fx.set.captions, o);
  const auto b = grad_check(params, fx.set.triplets, fx.set.captions, o);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(a.samples[i].tensor == b.samples[i].tensor);
    CHECK(a.samples[i].row == b.samples[i].row);
    CHECK(a.samples[i].col == b.samples[i].col);
    CHECK(a.samples[i].analytic == b.samples[i].analytic);
  }
  o.eps = 1e-2;
  CHECK_THROWS_AS(grad_check(params, fx.set.triplets, fx.set.captions, o),
                  ValidationError);
}

TEST_CASE("structurally unused weights get zero gradient on both sides") {
  const auto cfg = small_config();
  const auto params = random_params(cfg, 8);
  const auto texts = std::vector{tokenize("a red cube", cfg.vocab),
                                 tokenize("a blue cone", cfg.vocab)};
  // A text-only scalar: contrastive loss between two captions' encodings.
  const auto loss = [&](const EncoderParams& p, EncoderParams* g) {
    Tape tape(g != nullptr);
    EncoderGraph graph(tape, p, g);
    const Var a[] = {graph.text(texts[0]), graph.text(texts[1])};
    const Var out = tape.info_nce(tape.maxsim_matrix(a, a), 0.07);
    if (g != nullptr) tape.backward(out);
    return tape.scalar(out);
  };
  auto grads = zeros_like(params);
  loss(params, &grads);
  CHECK(grads.blocks[0].cross_wq.isZero(0.0));
  CHECK(grads.blocks[0].cross_wv.isZero(0.0));
  CHECK(grads.image_proj.isZero(0.0));
  auto p = params;
  const double eps = 1e-4;
  p.blocks[0].cross_wk(3, 5) += eps;
  const double plus = loss(p, nullptr);
  p.blocks[0].cross_wk(3, 5) -= 2 * eps;
  const double minus = loss(p, nullptr);
  CHECK(std::abs((plus - minus) / (2 * eps)) < 1e-8);
  CHECK(std::abs(grads.blocks[0].cross_wk(3, 5)) < 1e-8);
}

TEST_CASE("AdamW first step matches a hand computation") {
  const auto cfg = small_config();
  auto params = random_params(cfg, 1);
  auto grads = zeros_like(params);
  grads.query_tokens(0, 0) = 0.5;
  grads.query_tokens(1, 2) = -2e-3;
  const double p00 = params.query_tokens(0, 0);
  const double p12 = params.query_tokens(1, 2);
  const double p33 = params.query_tokens(3, 3);
  AdamWOptions o;
  AdamW opt(params, o);
  const double lr = 1e-2;
  opt.step(params, grads, lr);
  // Bias-corrected moments after one step are g and g^2.
  const auto expect = [&](double p, double g) {
    const double decayed = p - lr * o.weight_decay * p;
    return decayed - (g == 0.0 ? 0.0 : lr * g / (std::abs(g) + o.eps));
  };
  CHECK(params.query_tokens(0, 0) == doctest::Approx(expect(p00, 0.5)).epsilon(1e-6));
  CHECK(params.query_tokens(1, 2) == doctest::Approx(expect(p12, -2e-3)).epsilon(1e-6));
  CHECK(params.query_tokens(3, 3) == doctest::Approx(expect(p33, 0.0)).epsilon(1e-6));
  CHECK(opt.steps() == 1);
  // Parameters stay exactly representable in float.
  CHECK(params.query_tokens(0, 0) ==
        static_cast<double>(static_cast<float>(params.query_tokens(0, 0))));
}

TEST_CASE("learning-rate schedule steps by the decay factor") {
  TrainConfig c;
  c.lr = 1e-5;
  CHECK(c.lr_at_epoch(1) == 1e-5);
  CHECK(c.lr_at_epoch(10) == 1e-5);
  CHECK(c.lr_at_epoch(11) == doctest::Approx(0.1 * c.lr_at_epoch(10)).epsilon(1e-15));
  CHECK(c.lr_at_epoch(21) == doctest::Approx(0.01 * c.lr_at_epoch(10)).epsilon(1e-15));
  CHECK_THROWS_AS(c.lr_at_epoch(0), ValidationError);
}

TEST_CASE("train config JSON") {
  TrainConfig c;
  c.lr = 2e-4;
  c.weights.caption = 0.0;
  const auto back = train_config_from_json(train_config_to_json(c));
  CHECK(back.lr == c.lr);
  CHECK(back.weights.caption == 0.0);
  CHECK(train_config_from_json({{"epochs", 3}}).epochs == 3);
  CHECK_THROWS_AS(train_config_from_json({{"epoch", 3}}), ValidationError);
  CHECK_THROWS_AS(train_config_from_json({{"lr", -1.0}}), ValidationError);
  CHECK_THROWS_AS(train_config_from_json({{"loss_t_weight", 0.0}, {"loss_c_weight", 0.0}}),
                  ValidationError);
}

TEST_CASE("training is deterministic and reduces the loss") {
  const auto cfg = small_config();
  const Fixture fx(64, 4, cfg);
  TrainConfig tc;
  tc.batch_size = 16;
  tc.epochs = 12;
  tc.seed = 9;
  std::vector<EpochStats> seen;
  const auto a = train(fx.set, cfg, tc, std::nullopt,
                       [&](const EpochStats& s) { seen.push_back(s); });
  const auto b = train(fx.set, cfg, tc);
  CHECK(encode_checkpoint(a.params) == encode_checkpoint(b.params));
  REQUIRE(a.trace.epochs.size() == 12);
  CHECK(seen.size() == 12);
  CHECK(a.trace.epochs.back().loss_total < a.trace.initial.total);
  CHECK(a.trace.epochs[10].lr == doctest::Approx(0.1 * a.trace.epochs[9].lr).epsilon(1e-15));

  const auto csv = a.trace.to_csv();
  CHECK(csv.rfind("epoch,loss_t,loss_c,loss_total\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);

  tc.seed = 10;
  CHECK_FALSE(encode_checkpoint(train(fx.set, cfg, tc).params) ==
              encode_checkpoint(a.params));
}

TEST_CASE("misaligned positives raise the loss of trained parameters") {
  const auto cfg = small_config();
  const Fixture fx(64, 6, cfg);
  TrainConfig tc;
  tc.batch_size = 16;
  tc.epochs = 10;
  const auto trained = train(fx.set, cfg, tc).params;
  const auto t = std::span(fx.set.triplets).first(16);
  const auto c = std::span(fx.set.captions).first(16);
  const double aligned = batch_loss(t, c, trained, tc.temperature).total;
  Rng rng(1);
  int worse = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TripletItem> shuffled_t(t.begin(), t.end());
    std::vector<CaptionItem> shuffled_c(c.begin(), c.end());
    // Break the pairing: permute the targets/images against the queries.
    std::vector<std::size_t> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span(perm));
    for (std::size_t i = 0; i < 16; ++i) {
      shuffled_t[i].target = t[perm[i]].target;
      shuffled_c[i].image = c[perm[i]].image;
    }
    worse += batch_loss(shuffled_t, shuffled_c, trained, tc.temperature).total > aligned;
  }
  CHECK(worse == 20);
}

TEST_CASE("training input errors") {
  const auto cfg = small_config();
  const Fixture fx(8, 7, cfg);
  TrainConfig tc;
  tc.batch_size = 16;
  CHECK_THROWS_AS(train(fx.set, cfg, tc), ValidationError);
  tc.batch_size = 4;
  tc.epochs = 1;
  tc.temperature = 1e-320;  // scores / tau overflow
  CHECK_THROWS_AS(train(fx.set, cfg, tc), DivergenceError);
}
