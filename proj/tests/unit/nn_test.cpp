// tests/unit/nn_test.cpp
//
// The training machinery is validated against central finite differences:
// every layer's analytic input and parameter gradients must match the
// numerical Jacobian action on a random probe.

// Copyright 2026  The Honkpipe Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "honk/nn/layers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>

#include "honk/nn/checkpoint.hpp"
#include "honk/nn/train.hpp"

namespace honk::nn {
namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (float& v : t.data) v = static_cast<float>(rng.normal(0.0, scale));
  return t;
}

// Scalar probe loss L = sum_i r_i * y_i with fixed random r.
struct Probe {
  Tensor r;
  double loss(const Tensor& y) const {
    double acc = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i)
      acc += static_cast<double>(r.data[i]) * y.data[i];
    return acc;
  }
};

// Central-difference check of input and parameter gradients on one layer.
void check_gradients(Layer& layer, Tensor x, Rng& rng, double eps = 1e-2,
                     double rel_tol = 2e-2, double abs_tol = 2e-3) {
  layer.init(rng);
  Tensor y = layer.forward(x, /*training=*/true);
  Probe probe{random_tensor(y.shape, rng)};

  std::vector<NamedParam> params;
  layer.collect("p", params);
  for (NamedParam& p : params)
    if (p.grad) p.grad->fill(0.0f);

  Tensor gx = layer.backward(probe.r);
  ASSERT_TRUE(gx.same_shape(x));

  auto fd = [&](std::function<float&()> cell) {
    float& v = cell();
    const float orig = v;
    v = orig + static_cast<float>(eps);
    const double up = probe.loss(layer.forward(x, true));
    v = orig - static_cast<float>(eps);
    const double dn = probe.loss(layer.forward(x, true));
    v = orig;
    return (up - dn) / (2.0 * eps);
  };

  // input gradient, probed at a deterministic subset of cells
  const size_t stride_x = std::max<size_t>(1, x.data.size() / 24);
  for (size_t i = 0; i < x.data.size(); i += stride_x) {
    const double numeric = fd([&]() -> float& { return x.data[i]; });
    const double analytic = gx.data[i];
    EXPECT_NEAR(analytic, numeric, abs_tol + rel_tol * std::fabs(numeric))
        << layer.kind() << " input cell " << i;
  }

  // parameter gradients
  for (NamedParam& p : params) {
    if (!p.grad) continue;
    const size_t stride_p = std::max<size_t>(1, p.value->data.size() / 16);
    for (size_t i = 0; i < p.value->data.size(); i += stride_p) {
      const double numeric = fd([&]() -> float& { return p.value->data[i]; });
      const double analytic = p.grad->data[i];
      EXPECT_NEAR(analytic, numeric, abs_tol + rel_tol * std::fabs(numeric))
          << layer.kind() << " param " << p.name << " cell " << i;
    }
  }
}

TEST(Gradients, Dense) {
  Rng rng(1);
  Dense layer(6, 4);
  check_gradients(layer, random_tensor({3, 6}, rng), rng);
}

TEST(Gradients, ConvBasic) {
  Rng rng(2);
  Conv2D layer(2, 3, 3, {.stride = 1, .pad = 1});
  check_gradients(layer, random_tensor({2, 2, 6, 6}, rng), rng);
}

TEST(Gradients, ConvStridedDilated) {
  Rng rng(3);
  Conv2D layer(2, 4, 3, {.stride = 2, .pad = 2, .dilation = 2});
  check_gradients(layer, random_tensor({2, 2, 9, 9}, rng), rng);
}

TEST(Gradients, ConvGrouped) {
  Rng rng(4);
  Conv2D layer(4, 4, 3, {.stride = 1, .pad = 1, .groups = 2});
  check_gradients(layer, random_tensor({2, 4, 5, 5}, rng), rng);
}

TEST(Gradients, DepthwiseConv) {
  Rng rng(5);
  Conv2D layer(3, 3, 3, {.stride = 1, .pad = 1, .groups = 3});
  check_gradients(layer, random_tensor({2, 3, 5, 5}, rng), rng);
}

TEST(Gradients, MaxPool) {
  Rng rng(6);
  MaxPool2D layer(2);
  // spread values so finite differences never flip the argmax
  check_gradients(layer, random_tensor({2, 3, 6, 6}, rng, 10.0), rng, 1e-3);
}

TEST(Gradients, GlobalAvgPool) {
  Rng rng(7);
  GlobalAvgPool layer;
  check_gradients(layer, random_tensor({2, 3, 4, 4}, rng), rng);
}

TEST(Gradients, Upsample) {
  Rng rng(8);
  Upsample2D layer(2);
  check_gradients(layer, random_tensor({2, 2, 3, 3}, rng), rng);
}

TEST(Gradients, BatchNormTraining) {
  Rng rng(9);
  BatchNorm2D layer(3);
  check_gradients(layer, random_tensor({4, 3, 5, 5}, rng), rng, 1e-2, 4e-2, 4e-3);
}

TEST(Gradients, ReluSigmoidSoftmax) {
  Rng rng(10);
  {
    ReLU layer;
    check_gradients(layer, random_tensor({4, 8}, rng), rng);
  }
  {
    Sigmoid layer;
    check_gradients(layer, random_tensor({4, 8}, rng), rng);
  }
  {
    Softmax layer;
    check_gradients(layer, random_tensor({4, 6}, rng), rng);
  }
}

TEST(Gradients, ChannelShuffle) {
  Rng rng(11);
  ChannelShuffle layer(2);
  check_gradients(layer, random_tensor({2, 4, 3, 3}, rng), rng);
}

TEST(Gradients, ResidualWithProjection) {
  Rng rng(12);
  auto main = std::make_unique<Sequential>();
  main->emplace<Conv2D>(2, 4, 3, Conv2DOpts{.stride = 1, .pad = 1});
  main->emplace<ReLU>();
  main->emplace<Conv2D>(4, 4, 3, Conv2DOpts{.stride = 1, .pad = 1});
  auto shortcut = std::make_unique<Sequential>();
  shortcut->emplace<Conv2D>(2, 4, 1, Conv2DOpts{});
  Residual layer(std::move(main), std::move(shortcut));
  // small eps: an inner ReLU makes the probe loss piecewise linear in the
  // weights, so wide central differences straddle kinks
  check_gradients(layer, random_tensor({2, 2, 5, 5}, rng), rng, 1e-3, 4e-2, 4e-3);
}

TEST(Gradients, ConcatBranches) {
  Rng rng(13);
  std::vector<std::unique_ptr<Sequential>> branches;
  auto b1 = std::make_unique<Sequential>();
  b1->emplace<Conv2D>(2, 3, 1, Conv2DOpts{});
  branches.push_back(std::move(b1));
  auto b2 = std::make_unique<Sequential>();
  b2->emplace<Conv2D>(2, 2, 3, Conv2DOpts{.stride = 1, .pad = 1});
  b2->emplace<ReLU>();
  branches.push_back(std::move(b2));
  Concat layer(std::move(branches));
  check_gradients(layer, random_tensor({2, 2, 4, 4}, rng), rng);
}

TEST(Gradients, SequentialCompositeWithLoss) {
  // full pipeline gradient against finite differences through the xent loss
  Rng rng(14);
  Sequential net;
  net.emplace<Conv2D>(1, 4, 3, Conv2DOpts{.stride = 2, .pad = 1});
  net.emplace<BatchNorm2D>(4);
  net.emplace<ReLU>();
  net.emplace<MaxPool2D>(2);
  net.emplace<Flatten>();
  net.emplace<Dense>(4 * 2 * 2, 4);
  net.init(rng);

  Tensor x = random_tensor({3, 1, 8, 8}, rng);
  std::vector<int> labels = {0, 2, 3};

  std::vector<NamedParam> params;
  net.collect("net", params);
  for (NamedParam& p : params)
    if (p.grad) p.grad->fill(0.0f);

  XentResult res = softmax_cross_entropy(net.forward(x, true), labels);
  net.backward(res.grad);

  auto loss_at = [&]() {
    XentResult r = softmax_cross_entropy(net.forward(x, true), labels);
    return r.loss;
  };
  const double eps = 1e-3;  // narrow, to stay within one linear piece of the ReLUs
  for (NamedParam& p : params) {
    if (!p.grad) continue;
    const size_t stride = std::max<size_t>(1, p.value->data.size() / 8);
    for (size_t i = 0; i < p.value->data.size(); i += stride) {
      const float orig = p.value->data[i];
      p.value->data[i] = orig + static_cast<float>(eps);
      const double up = loss_at();
      p.value->data[i] = orig - static_cast<float>(eps);
      const double dn = loss_at();
      p.value->data[i] = orig;
      const double numeric = (up - dn) / (2.0 * eps);
      EXPECT_NEAR(p.grad->data[i], numeric, 3e-3 + 4e-2 * std::fabs(numeric))
          << p.name << "[" << i << "]";
    }
  }
}

TEST(Losses, XentProbsNormalized) {
  Rng rng(15);
  Tensor logits = random_tensor({5, 4}, rng, 2.0);
  XentResult r = softmax_cross_entropy(logits, {0, 1, 2, 3, 1});
  for (int i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) sum += r.probs.data[static_cast<size_t>(i) * 4 + j];
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
  EXPECT_GT(r.loss, 0.0);
}

TEST(Losses, BceMatchesFiniteDifference) {
  Rng rng(16);
  Tensor logits = random_tensor({6, 1}, rng, 1.5);
  std::vector<float> targets = {1, 0, 1, 1, 0, 0};
  Tensor grad;
  bce_with_logits(logits, targets, &grad);
  const double eps = 1e-3;
  for (int i = 0; i < 6; ++i) {
    Tensor up = logits, dn = logits;
    up.data[static_cast<size_t>(i)] += static_cast<float>(eps);
    dn.data[static_cast<size_t>(i)] -= static_cast<float>(eps);
    const double numeric = (bce_with_logits(up, targets) - bce_with_logits(dn, targets)) /
                           (2.0 * eps);
    EXPECT_NEAR(grad.data[static_cast<size_t>(i)], numeric, 1e-4);
  }
}

TEST(Adam, MinimizesQuadratic) {
  // single dense layer fitting y = 0 from fixed input: weights must shrink
  Rng rng(17);
  Dense layer(4, 4);
  layer.init(rng);
  std::vector<NamedParam> params;
  layer.collect("d", params);
  Adam opt(params, 0.05);
  Tensor x = random_tensor({8, 4}, rng);
  Tensor target({8, 4});
  double first_loss = 0.0, last_loss = 0.0;
  for (int step = 0; step < 150; ++step) {
    opt.zero_grad();
    Tensor y = layer.forward(x, true);
    Tensor grad;
    const double loss = mse_loss(y, target, &grad);
    layer.backward(grad);
    opt.step();
    if (step == 0) first_loss = loss;
    last_loss = loss;
  }
  EXPECT_LT(last_loss, first_loss * 1e-3);
}

TEST(Checkpoint, SavePerturbLoadRestores) {
  Rng rng(18);
  Sequential net;
  net.emplace<Conv2D>(1, 2, 3, Conv2DOpts{.stride = 1, .pad = 1});
  net.emplace<BatchNorm2D>(2);
  net.emplace<Flatten>();
  net.emplace<Dense>(2 * 4 * 4, 3);
  net.init(rng);
  const uint64_t h0 = parameter_hash(net);

  auto path = std::filesystem::temp_directory_path() / "honk_ckpt_test.bin";
  save_checkpoint(path.string(), net);

  std::vector<NamedParam> params;
  net.collect("model", params);
  params[0].value->data[0] += 1.0f;
  EXPECT_NE(parameter_hash(net), h0);

  load_checkpoint(path.string(), net);
  EXPECT_EQ(parameter_hash(net), h0);
  std::filesystem::remove(path);
}

TEST(Checkpoint, ShapeMismatchRejected) {
  Rng rng(19);
  Sequential a;
  a.emplace<Dense>(4, 3);
  a.init(rng);
  auto path = std::filesystem::temp_directory_path() / "honk_ckpt_mismatch.bin";
  save_checkpoint(path.string(), a);

  Sequential b;
  b.emplace<Dense>(5, 3);
  b.init(rng);
  EXPECT_THROW(load_checkpoint(path.string(), b), WeightManifestMismatch);
  std::filesystem::remove(path);
}

TEST(Summary, CountsKinds) {
  Sequential net;
  net.emplace<Conv2D>(1, 2, 3, Conv2DOpts{});
  net.emplace<MaxPool2D>(2);
  net.emplace<Conv2D>(2, 2, 3, Conv2DOpts{});
  net.emplace<Flatten>();
  net.emplace<Dense>(8, 4);
  net.emplace<Softmax>();
  ArchSummary s = summarize(net);
  EXPECT_EQ(s.get("conv"), 2);
  EXPECT_EQ(s.get("maxpool"), 1);
  EXPECT_EQ(s.get("dense"), 1);
  EXPECT_EQ(s.get("softmax"), 1);
  EXPECT_EQ(s.get("batchnorm"), 0);
}

TEST(Stack, BatchesTensors) {
  Tensor a({2, 2});
  a.data = {1, 2, 3, 4};
  Tensor b({2, 2});
  b.data = {5, 6, 7, 8};
  Tensor s = stack({&a, &b});
  EXPECT_EQ(s.shape, (std::vector<int>{2, 2, 2}));
  EXPECT_EQ(s.data, (std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8}));
}

}  // namespace
}  // namespace honk::nn
