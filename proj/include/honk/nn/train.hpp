// honk/nn/train.hpp
//
// Adam, loss functions, and batch plumbing shared by the autoencoder and
// classifier training loops.

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

#ifndef HONK_NN_TRAIN_HPP_
#define HONK_NN_TRAIN_HPP_

#include <cmath>
#include <vector>

#include "honk/nn/layers.hpp"

namespace honk::nn {

class Adam {
 public:
  explicit Adam(std::vector<NamedParam> params, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    for (const NamedParam& p : params_) {
      m_.emplace_back(p.value->numel(), 0.0);
      v_.emplace_back(p.value->numel(), 0.0);
    }
  }

  void zero_grad() {
    for (NamedParam& p : params_)
      if (p.grad) p.grad->fill(0.0f);
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, t_);
    const double c2 = 1.0 - std::pow(b2_, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      NamedParam& p = params_[i];
      if (!p.grad || !p.trainable) continue;
      for (int64_t j = 0; j < p.value->numel(); ++j) {
        const double g = p.grad->data[static_cast<size_t>(j)];
        m_[i][static_cast<size_t>(j)] = b1_ * m_[i][static_cast<size_t>(j)] + (1.0 - b1_) * g;
        v_[i][static_cast<size_t>(j)] = b2_ * v_[i][static_cast<size_t>(j)] + (1.0 - b2_) * g * g;
        const double mhat = m_[i][static_cast<size_t>(j)] / c1;
        const double vhat = v_[i][static_cast<size_t>(j)] / c2;
        p.value->data[static_cast<size_t>(j)] -=
            static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  std::vector<NamedParam> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, b1_, b2_, eps_;
  int64_t t_ = 0;
};

// ---------- losses ----------

struct XentResult {
  double loss = 0.0;
  Tensor grad;   // w.r.t. logits
  Tensor probs;  // softmax of logits
};

inline XentResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  const int n = logits.dim(0), d = logits.dim(1);
  XentResult r;
  r.grad = Tensor(logits.shape);
  r.probs = Tensor(logits.shape);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const float* row = logits.ptr() + static_cast<size_t>(i) * d;
    float mx = row[0];
    for (int j = 1; j < d; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < d; ++j) sum += std::exp(static_cast<double>(row[j]) - mx);
    const double log_sum = std::log(sum) + mx;
    const int y = labels[static_cast<size_t>(i)];
    total += log_sum - row[y];
    for (int j = 0; j < d; ++j) {
      const double p = std::exp(static_cast<double>(row[j]) - log_sum);
      r.probs.data[static_cast<size_t>(i) * d + j] = static_cast<float>(p);
      r.grad.data[static_cast<size_t>(i) * d + j] =
          static_cast<float>((p - (j == y ? 1.0 : 0.0)) / n);
    }
  }
  r.loss = total / n;
  return r;
}

// Mean over all elements of (pred - target)^2.
inline double mse_loss(const Tensor& pred, const Tensor& target, Tensor* grad = nullptr) {
  if (!pred.same_shape(target))
    throw ShapeMismatch(str_cat("mse: shape ", pred.shape_str(), " vs ",
                                target.shape_str()));
  const double scale = 1.0 / static_cast<double>(pred.numel());
  double total = 0.0;
  if (grad) *grad = Tensor(pred.shape);
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const double d = static_cast<double>(pred.data[i]) - target.data[i];
    total += d * d;
    if (grad) grad->data[i] = static_cast<float>(2.0 * d * scale);
  }
  return total * scale;
}

// Binary cross entropy on logits [N, 1]; targets in {0, 1}.
inline double bce_with_logits(const Tensor& logits, const std::vector<float>& targets,
                              Tensor* grad = nullptr) {
  const int n = logits.dim(0);
  if (grad) *grad = Tensor(logits.shape);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = logits.data[static_cast<size_t>(i)];
    const double t = targets[static_cast<size_t>(i)];
    // stable formulation: max(z,0) - z*t + log(1+exp(-|z|))
    total += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::fabs(z)));
    if (grad) {
      const double s = 1.0 / (1.0 + std::exp(-z));
      grad->data[static_cast<size_t>(i)] = static_cast<float>((s - t) / n);
    }
  }
  return total / n;
}

// ---------- batching ----------

// Stacks per-sample tensors (identical shapes) into one batch tensor.
inline Tensor stack(const std::vector<const Tensor*>& items) {
  if (items.empty()) throw ShapeMismatch("stack: empty batch");
  std::vector<int> shape = items[0]->shape;
  shape.insert(shape.begin(), static_cast<int>(items.size()));
  Tensor out(shape);
  const size_t stride = items[0]->data.size();
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i]->data.size() != stride)
      throw ShapeMismatch("stack: ragged batch");
    std::copy(items[i]->data.begin(), items[i]->data.end(),
              out.data.begin() + i * stride);
  }
  return out;
}

}  // namespace honk::nn

#endif  // HONK_NN_TRAIN_HPP_
