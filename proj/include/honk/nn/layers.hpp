// honk/nn/layers.hpp
//
// Minimal CNN layer zoo with reverse-mode gradients. Single-threaded and
// deterministic given the init seed; matrix products go through Eigen.

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

#ifndef HONK_NN_LAYERS_HPP_
#define HONK_NN_LAYERS_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "honk/nn/tensor.hpp"
#include "honk/rng.hpp"

namespace honk::nn {

using EMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

struct NamedParam {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
  bool trainable = true;
};

// Layer-kind counts for architecture introspection.
struct ArchSummary {
  std::map<std::string, int> counts;

  int get(const std::string& kind) const {
    auto it = counts.find(kind);
    return it == counts.end() ? 0 : it->second;
  }
  void add(const std::string& kind) { ++counts[kind]; }
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x, bool training) = 0;
  // Consumes the gradient w.r.t. this layer's output; accumulates parameter
  // gradients and returns the gradient w.r.t. the input of the last forward.
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::string kind() const = 0;
  virtual void init(Rng&) {}
  virtual void collect(const std::string& prefix, std::vector<NamedParam>& out) {
    (void)prefix;
    (void)out;
  }
  virtual void summarize(ArchSummary& s) const { s.add(kind()); }
  virtual void set_trainable(bool t) { trainable_ = t; }

 protected:
  bool trainable_ = true;
};

using LayerPtr = std::unique_ptr<Layer>;

// ---------- dense ----------

class Dense : public Layer {
 public:
  Dense(int in_features, int out_features, float init_scale = 0.0f)
      : in_(in_features), out_(out_features), init_scale_(init_scale),
        w_({out_features, in_features}), b_({out_features}),
        gw_({out_features, in_features}), gb_({out_features}) {}

  std::string kind() const override { return "dense"; }

  void init(Rng& rng) override {
    const float std = init_scale_ > 0.0f
                          ? init_scale_
                          : std::sqrt(2.0f / static_cast<float>(in_));
    for (float& v : w_.data) v = static_cast<float>(rng.normal(0.0, std));
    b_.fill(0.0f);
  }

  Tensor forward(const Tensor& x, bool) override {
    if (x.ndim() != 2 || x.dim(1) != in_)
      throw ShapeMismatch(str_cat("dense: expected [N,", in_, "], got ", x.shape_str()));
    x_ = x;
    const int n = x.dim(0);
    Tensor y({n, out_});
    ECMap xm(x.ptr(), n, in_);
    ECMap wm(w_.ptr(), out_, in_);
    EMap ym(y.ptr(), n, out_);
    ym.noalias() = xm * wm.transpose();
    for (int i = 0; i < n; ++i)
      for (int o = 0; o < out_; ++o) y.data[static_cast<size_t>(i) * out_ + o] += b_.data[o];
    return y;
  }

  Tensor backward(const Tensor& g) override {
    const int n = g.dim(0);
    ECMap gm(g.ptr(), n, out_);
    ECMap xm(x_.ptr(), n, in_);
    EMap gwm(gw_.ptr(), out_, in_);
    gwm.noalias() += gm.transpose() * xm;
    for (int i = 0; i < n; ++i)
      for (int o = 0; o < out_; ++o) gb_.data[o] += g.data[static_cast<size_t>(i) * out_ + o];
    Tensor gx({n, in_});
    EMap gxm(gx.ptr(), n, in_);
    ECMap wm(w_.ptr(), out_, in_);
    gxm.noalias() = gm * wm;
    return gx;
  }

  void collect(const std::string& p, std::vector<NamedParam>& out) override {
    out.push_back({p + ".weight", &w_, &gw_, trainable_});
    out.push_back({p + ".bias", &b_, &gb_, trainable_});
  }

 private:
  int in_, out_;
  float init_scale_;
  Tensor w_, b_, gw_, gb_, x_;
};

// ---------- conv2d ----------

struct Conv2DOpts {
  int stride = 1;
  int pad = 0;
  int dilation = 1;
  int groups = 1;
};

class Conv2D : public Layer {
 public:
  Conv2D(int in_ch, int out_ch, int k, Conv2DOpts opts = {})
      : in_ch_(in_ch), out_ch_(out_ch), k_(k), o_(opts),
        w_({out_ch, in_ch / opts.groups, k, k}), b_({out_ch}),
        gw_({out_ch, in_ch / opts.groups, k, k}), gb_({out_ch}) {
    if (in_ch % o_.groups != 0 || out_ch % o_.groups != 0)
      throw ShapeMismatch("conv: channels not divisible by groups");
  }

  std::string kind() const override { return "conv"; }

  void init(Rng& rng) override {
    const int fan_in = (in_ch_ / o_.groups) * k_ * k_;
    const float std = std::sqrt(2.0f / static_cast<float>(fan_in));
    for (float& v : w_.data) v = static_cast<float>(rng.normal(0.0, std));
    b_.fill(0.0f);
  }

  int out_size(int in) const {
    return (in + 2 * o_.pad - o_.dilation * (k_ - 1) - 1) / o_.stride + 1;
  }

  Tensor forward(const Tensor& x, bool) override {
    if (x.ndim() != 4 || x.dim(1) != in_ch_)
      throw ShapeMismatch(str_cat("conv: expected [N,", in_ch_, ",H,W], got ",
                                  x.shape_str()));
    x_ = x;
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    oh_ = out_size(h);
    ow_ = out_size(w);
    if (oh_ <= 0 || ow_ <= 0)
      throw ShapeMismatch(str_cat("conv: input ", x.shape_str(), " too small for k=", k_));

    const int icg = in_ch_ / o_.groups, ocg = out_ch_ / o_.groups;
    const int cols_rows = icg * k_ * k_, cols_cols = oh_ * ow_;
    Tensor y({n, out_ch_, oh_, ow_});
    col_.assign(static_cast<size_t>(cols_rows) * cols_cols, 0.0f);

    for (int i = 0; i < n; ++i) {
      for (int g = 0; g < o_.groups; ++g) {
        im2col(x.ptr() + ((static_cast<size_t>(i) * in_ch_ + g * icg) * h) * w, h, w, icg);
        ECMap wm(w_.ptr() + static_cast<size_t>(g) * ocg * cols_rows, ocg, cols_rows);
        ECMap cm(col_.data(), cols_rows, cols_cols);
        EMap ym(y.ptr() + ((static_cast<size_t>(i) * out_ch_ + g * ocg) * oh_) * ow_,
                ocg, cols_cols);
        ym.noalias() = wm * cm;
      }
      float* yp = y.ptr() + static_cast<size_t>(i) * out_ch_ * oh_ * ow_;
      for (int c = 0; c < out_ch_; ++c)
        for (int s = 0; s < oh_ * ow_; ++s) yp[static_cast<size_t>(c) * oh_ * ow_ + s] += b_.data[c];
    }
    return y;
  }

  Tensor backward(const Tensor& g) override {
    const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
    const int icg = in_ch_ / o_.groups, ocg = out_ch_ / o_.groups;
    const int cols_rows = icg * k_ * k_, cols_cols = oh_ * ow_;
    Tensor gx(x_.shape);
    std::vector<float> gcol(static_cast<size_t>(cols_rows) * cols_cols);

    for (int i = 0; i < n; ++i) {
      const float* gp = g.ptr() + static_cast<size_t>(i) * out_ch_ * oh_ * ow_;
      for (int c = 0; c < out_ch_; ++c) {
        double acc = 0.0;
        for (int s = 0; s < cols_cols; ++s) acc += gp[static_cast<size_t>(c) * cols_cols + s];
        gb_.data[c] += static_cast<float>(acc);
      }
      for (int gidx = 0; gidx < o_.groups; ++gidx) {
        im2col(x_.ptr() + ((static_cast<size_t>(i) * in_ch_ + gidx * icg) * h) * w, h, w, icg);
        ECMap gm(gp + static_cast<size_t>(gidx) * ocg * cols_cols, ocg, cols_cols);
        ECMap cm(col_.data(), cols_rows, cols_cols);
        EMap gwm(gw_.ptr() + static_cast<size_t>(gidx) * ocg * cols_rows, ocg, cols_rows);
        gwm.noalias() += gm * cm.transpose();
        ECMap wm(w_.ptr() + static_cast<size_t>(gidx) * ocg * cols_rows, ocg, cols_rows);
        EMap gcm(gcol.data(), cols_rows, cols_cols);
        gcm.noalias() = wm.transpose() * gm;
        col2im(gcol.data(),
               gx.ptr() + ((static_cast<size_t>(i) * in_ch_ + gidx * icg) * h) * w, h, w, icg);
      }
    }
    return gx;
  }

  void collect(const std::string& p, std::vector<NamedParam>& out) override {
    out.push_back({p + ".weight", &w_, &gw_, trainable_});
    out.push_back({p + ".bias", &b_, &gb_, trainable_});
  }

 private:
  void im2col(const float* src, int h, int w, int channels) {
    size_t idx = 0;
    for (int c = 0; c < channels; ++c) {
      const float* plane = src + static_cast<size_t>(c) * h * w;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          for (int y = 0; y < oh_; ++y) {
            const int sy = y * o_.stride - o_.pad + ky * o_.dilation;
            if (sy < 0 || sy >= h) {
              for (int x = 0; x < ow_; ++x) col_[idx++] = 0.0f;
              continue;
            }
            for (int x = 0; x < ow_; ++x) {
              const int sx = x * o_.stride - o_.pad + kx * o_.dilation;
              col_[idx++] = (sx < 0 || sx >= w) ? 0.0f : plane[static_cast<size_t>(sy) * w + sx];
            }
          }
        }
      }
    }
  }

  void col2im(const float* cols, float* dst, int h, int w, int channels) {
    size_t idx = 0;
    for (int c = 0; c < channels; ++c) {
      float* plane = dst + static_cast<size_t>(c) * h * w;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          for (int y = 0; y < oh_; ++y) {
            const int sy = y * o_.stride - o_.pad + ky * o_.dilation;
            if (sy < 0 || sy >= h) {
              idx += ow_;
              continue;
            }
            for (int x = 0; x < ow_; ++x) {
              const int sx = x * o_.stride - o_.pad + kx * o_.dilation;
              if (sx >= 0 && sx < w) plane[static_cast<size_t>(sy) * w + sx] += cols[idx];
              ++idx;
            }
          }
        }
      }
    }
  }

  int in_ch_, out_ch_, k_;
  Conv2DOpts o_;
  Tensor w_, b_, gw_, gb_, x_;
  std::vector<float> col_;
  int oh_ = 0, ow_ = 0;
};

// ---------- pooling ----------

class MaxPool2D : public Layer {
 public:
  explicit MaxPool2D(int k = 2, int stride = 0) : k_(k), s_(stride > 0 ? stride : k) {}

  std::string kind() const override { return "maxpool"; }

  Tensor forward(const Tensor& x, bool) override {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    in_shape_ = x.shape;
    oh_ = (h - k_) / s_ + 1;
    ow_ = (w - k_) / s_ + 1;
    if (oh_ <= 0 || ow_ <= 0)
      throw ShapeMismatch(str_cat("maxpool: input ", x.shape_str(), " too small"));
    Tensor y({n, c, oh_, ow_});
    argmax_.resize(y.data.size());
    size_t o = 0;
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        const float* plane = x.ptr() + (static_cast<size_t>(i) * c + ch) * h * w;
        for (int y0 = 0; y0 < oh_; ++y0) {
          for (int x0 = 0; x0 < ow_; ++x0) {
            float best = plane[static_cast<size_t>(y0 * s_) * w + x0 * s_];
            size_t best_idx = static_cast<size_t>(y0 * s_) * w + x0 * s_;
            for (int ky = 0; ky < k_; ++ky)
              for (int kx = 0; kx < k_; ++kx) {
                size_t idx = static_cast<size_t>(y0 * s_ + ky) * w + (x0 * s_ + kx);
                if (plane[idx] > best) {
                  best = plane[idx];
                  best_idx = idx;
                }
              }
            y.data[o] = best;
            argmax_[o] = (static_cast<size_t>(i) * c + ch) * h * w + best_idx;
            ++o;
          }
        }
      }
    }
    return y;
  }

  Tensor backward(const Tensor& g) override {
    Tensor gx(in_shape_);
    for (size_t o = 0; o < g.data.size(); ++o) gx.data[argmax_[o]] += g.data[o];
    return gx;
  }

 private:
  int k_, s_;
  std::vector<int> in_shape_;
  std::vector<size_t> argmax_;
  int oh_ = 0, ow_ = 0;
};

class GlobalAvgPool : public Layer {
 public:
  std::string kind() const override { return "avgpool"; }

  Tensor forward(const Tensor& x, bool) override {
    in_shape_ = x.shape;
    const int n = x.dim(0), c = x.dim(1);
    const int hw = x.dim(2) * x.dim(3);
    Tensor y({n, c});
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c; ++ch) {
        const float* p = x.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
        double acc = 0.0;
        for (int s = 0; s < hw; ++s) acc += p[s];
        y.data[static_cast<size_t>(i) * c + ch] = static_cast<float>(acc / hw);
      }
    return y;
  }

  Tensor backward(const Tensor& g) override {
    Tensor gx(in_shape_);
    const int n = in_shape_[0], c = in_shape_[1];
    const int hw = in_shape_[2] * in_shape_[3];
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c; ++ch) {
        const float gv = g.data[static_cast<size_t>(i) * c + ch] / static_cast<float>(hw);
        float* p = gx.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
        for (int s = 0; s < hw; ++s) p[s] = gv;
      }
    return gx;
  }

 private:
  std::vector<int> in_shape_;
};

// Nearest-neighbor upsampling by an integer factor.
class Upsample2D : public Layer {
 public:
  explicit Upsample2D(int factor = 2) : f_(factor) {}

  std::string kind() const override { return "upsample"; }

  Tensor forward(const Tensor& x, bool) override {
    in_shape_ = x.shape;
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor y({n, c, h * f_, w * f_});
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c; ++ch) {
        const float* sp = x.ptr() + (static_cast<size_t>(i) * c + ch) * h * w;
        float* dp = y.ptr() + (static_cast<size_t>(i) * c + ch) * h * w * f_ * f_;
        for (int yy = 0; yy < h * f_; ++yy)
          for (int xx = 0; xx < w * f_; ++xx)
            dp[static_cast<size_t>(yy) * w * f_ + xx] =
                sp[static_cast<size_t>(yy / f_) * w + xx / f_];
      }
    return y;
  }

  Tensor backward(const Tensor& g) override {
    Tensor gx(in_shape_);
    const int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c; ++ch) {
        float* sp = gx.ptr() + (static_cast<size_t>(i) * c + ch) * h * w;
        const float* dp = g.ptr() + (static_cast<size_t>(i) * c + ch) * h * w * f_ * f_;
        for (int yy = 0; yy < h * f_; ++yy)
          for (int xx = 0; xx < w * f_; ++xx)
            sp[static_cast<size_t>(yy / f_) * w + xx / f_] +=
                dp[static_cast<size_t>(yy) * w * f_ + xx];
      }
    return gx;
  }

 private:
  int f_;
  std::vector<int> in_shape_;
};

// ---------- normalization ----------

class BatchNorm2D : public Layer {
 public:
  explicit BatchNorm2D(int channels, double momentum = 0.1, double eps = 1e-5)
      : c_(channels), momentum_(momentum), eps_(eps),
        gamma_({channels}), beta_({channels}), ggamma_({channels}), gbeta_({channels}),
        run_mean_({channels}), run_var_({channels}) {
    gamma_.fill(1.0f);
    run_var_.fill(1.0f);
  }

  std::string kind() const override { return "batchnorm"; }

  Tensor forward(const Tensor& x, bool training) override {
    const int n = x.dim(0);
    const int hw = x.dim(2) * x.dim(3);
    const int64_t m = static_cast<int64_t>(n) * hw;
    x_ = x;
    mean_.assign(c_, 0.0);
    var_.assign(c_, 0.0);
    if (training) {
      for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c_; ++ch) {
          const float* p = x.ptr() + (static_cast<size_t>(i) * c_ + ch) * hw;
          double acc = 0.0;
          for (int s = 0; s < hw; ++s) acc += p[s];
          mean_[ch] += acc;
        }
      for (int ch = 0; ch < c_; ++ch) mean_[ch] /= static_cast<double>(m);
      for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c_; ++ch) {
          const float* p = x.ptr() + (static_cast<size_t>(i) * c_ + ch) * hw;
          double acc = 0.0;
          for (int s = 0; s < hw; ++s) {
            double d = p[s] - mean_[ch];
            acc += d * d;
          }
          var_[ch] += acc;
        }
      for (int ch = 0; ch < c_; ++ch) var_[ch] /= static_cast<double>(m);
      for (int ch = 0; ch < c_; ++ch) {
        run_mean_.data[ch] = static_cast<float>((1.0 - momentum_) * run_mean_.data[ch] +
                                                momentum_ * mean_[ch]);
        run_var_.data[ch] = static_cast<float>((1.0 - momentum_) * run_var_.data[ch] +
                                               momentum_ * var_[ch]);
      }
    } else {
      for (int ch = 0; ch < c_; ++ch) {
        mean_[ch] = run_mean_.data[ch];
        var_[ch] = run_var_.data[ch];
      }
    }

    Tensor y(x.shape);
    xhat_.resize(x.data.size());
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c_; ++ch) {
        const double inv = 1.0 / std::sqrt(var_[ch] + eps_);
        const float* p = x.ptr() + (static_cast<size_t>(i) * c_ + ch) * hw;
        float* q = y.ptr() + (static_cast<size_t>(i) * c_ + ch) * hw;
        float* xh = xhat_.data() + (static_cast<size_t>(i) * c_ + ch) * hw;
        for (int s = 0; s < hw; ++s) {
          xh[s] = static_cast<float>((p[s] - mean_[ch]) * inv);
          q[s] = gamma_.data[ch] * xh[s] + beta_.data[ch];
        }
      }
    training_ = training;
    return y;
  }

  Tensor backward(const Tensor& g) override {
    const int n = x_.dim(0);
    const int hw = x_.dim(2) * x_.dim(3);
    const double m = static_cast<double>(n) * hw;
    Tensor gx(x_.shape);

    for (int ch = 0; ch < c_; ++ch) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (int i = 0; i < n; ++i) {
        const float* gp = g.ptr() + (static_cast<size_t>(i) * c_ + ch) * hw;
        const float* xh = xhat_.data() + (static_cast<size_t>(i) * c_ + ch) * hw;
        for (int s = 0; s < hw; ++s) {
          sum_g += gp[s];
          sum_gx += static_cast<double>(gp[s]) * xh[s];
        }
      }
      ggamma_.data[ch] += static_cast<float>(sum_gx);
      gbeta_.data[ch] += static_cast<float>(sum_g);
      const double inv = gamma_.data[ch] / std::sqrt(var_[ch] + eps_);
      for (int i = 0; i < n; ++i) {
        const float* gp = g.ptr() + (static_cast<size_t>(i) * c_ + ch) * hw;
        const float* xh = xhat_.data() + (static_cast<size_t>(i) * c_ + ch) * hw;
        float* out = gx.ptr() + (static_cast<size_t>(i) * c_ + ch) * hw;
        if (training_) {
          for (int s = 0; s < hw; ++s)
            out[s] = static_cast<float>(inv * (gp[s] - sum_g / m - xh[s] * sum_gx / m));
        } else {
          for (int s = 0; s < hw; ++s) out[s] = static_cast<float>(inv * gp[s]);
        }
      }
    }
    return gx;
  }

  void collect(const std::string& p, std::vector<NamedParam>& out) override {
    out.push_back({p + ".gamma", &gamma_, &ggamma_, trainable_});
    out.push_back({p + ".beta", &beta_, &gbeta_, trainable_});
    // running stats participate in checkpoints but never in optimizer steps
    out.push_back({p + ".running_mean", &run_mean_, nullptr, false});
    out.push_back({p + ".running_var", &run_var_, nullptr, false});
  }

 private:
  int c_;
  double momentum_, eps_;
  Tensor gamma_, beta_, ggamma_, gbeta_, x_;
  Tensor run_mean_, run_var_;
  std::vector<float> xhat_;
  std::vector<double> mean_, var_;
  bool training_ = true;
};

// ---------- elementwise ----------

class ReLU : public Layer {
 public:
  std::string kind() const override { return "relu"; }

  Tensor forward(const Tensor& x, bool) override {
    y_ = x;
    for (float& v : y_.data) v = v > 0.0f ? v : 0.0f;
    return y_;
  }

  Tensor backward(const Tensor& g) override {
    Tensor gx = g;
    for (size_t i = 0; i < gx.data.size(); ++i)
      if (y_.data[i] <= 0.0f) gx.data[i] = 0.0f;
    return gx;
  }

 private:
  Tensor y_;
};

class Sigmoid : public Layer {
 public:
  std::string kind() const override { return "sigmoid"; }

  Tensor forward(const Tensor& x, bool) override {
    y_ = x;
    for (float& v : y_.data) v = 1.0f / (1.0f + std::exp(-v));
    return y_;
  }

  Tensor backward(const Tensor& g) override {
    Tensor gx = g;
    for (size_t i = 0; i < gx.data.size(); ++i)
      gx.data[i] *= y_.data[i] * (1.0f - y_.data[i]);
    return gx;
  }

 private:
  Tensor y_;
};

// Row-wise softmax over the last dimension of [N, D].
class Softmax : public Layer {
 public:
  std::string kind() const override { return "softmax"; }

  Tensor forward(const Tensor& x, bool) override {
    y_ = x;
    const int n = x.dim(0), d = x.dim(1);
    for (int i = 0; i < n; ++i) {
      float* row = y_.ptr() + static_cast<size_t>(i) * d;
      float mx = row[0];
      for (int j = 1; j < d; ++j) mx = std::max(mx, row[j]);
      double sum = 0.0;
      for (int j = 0; j < d; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      for (int j = 0; j < d; ++j) row[j] = static_cast<float>(row[j] / sum);
    }
    return y_;
  }

  Tensor backward(const Tensor& g) override {
    const int n = g.dim(0), d = g.dim(1);
    Tensor gx(g.shape);
    for (int i = 0; i < n; ++i) {
      const float* y = y_.ptr() + static_cast<size_t>(i) * d;
      const float* gr = g.ptr() + static_cast<size_t>(i) * d;
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += static_cast<double>(gr[j]) * y[j];
      float* out = gx.ptr() + static_cast<size_t>(i) * d;
      for (int j = 0; j < d; ++j)
        out[j] = static_cast<float>(y[j] * (gr[j] - dot));
    }
    return gx;
  }

 private:
  Tensor y_;
};

// ---------- shape plumbing ----------

class Flatten : public Layer {
 public:
  std::string kind() const override { return "flatten"; }

  Tensor forward(const Tensor& x, bool) override {
    in_shape_ = x.shape;
    return x.reshaped({x.dim(0), static_cast<int>(x.numel() / x.dim(0))});
  }

  Tensor backward(const Tensor& g) override { return g.reshaped(in_shape_); }

 private:
  std::vector<int> in_shape_;
};

// [N, D] -> [N, c, h, w]
class Reshape : public Layer {
 public:
  Reshape(int c, int h, int w) : c_(c), h_(h), w_(w) {}

  std::string kind() const override { return "reshape"; }

  Tensor forward(const Tensor& x, bool) override {
    in_shape_ = x.shape;
    return x.reshaped({x.dim(0), c_, h_, w_});
  }

  Tensor backward(const Tensor& g) override { return g.reshaped(in_shape_); }

 private:
  int c_, h_, w_;
  std::vector<int> in_shape_;
};

// ShuffleNet-style channel shuffle.
class ChannelShuffle : public Layer {
 public:
  explicit ChannelShuffle(int groups) : g_(groups) {}

  std::string kind() const override { return "shuffle"; }

  Tensor forward(const Tensor& x, bool) override {
    return permute(x, /*inverse=*/false);
  }

  Tensor backward(const Tensor& g) override { return permute(g, /*inverse=*/true); }

 private:
  Tensor permute(const Tensor& x, bool inverse) const {
    const int n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    if (c % g_ != 0) throw ShapeMismatch("shuffle: channels not divisible by groups");
    const int per = c / g_;
    Tensor y(x.shape);
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c; ++ch) {
        int dst = inverse ? (ch % g_) * per + ch / g_ : (ch % per) * g_ + ch / per;
        std::copy(x.ptr() + (static_cast<size_t>(i) * c + ch) * hw,
                  x.ptr() + (static_cast<size_t>(i) * c + ch + 1) * hw,
                  y.ptr() + (static_cast<size_t>(i) * c + dst) * hw);
      }
    return y;
  }

  int g_;
};

// ---------- containers ----------

class Sequential : public Layer {
 public:
  Sequential() = default;

  Sequential& add(LayerPtr l) {
    layers_.push_back(std::move(l));
    return *this;
  }

  template <typename T, typename... Args>
  Sequential& emplace(Args&&... args) {
    layers_.push_back(std::make_unique<T>(std::forward<Args>(args)...));
    return *this;
  }

  std::string kind() const override { return "sequential"; }

  Tensor forward(const Tensor& x, bool training) override {
    Tensor cur = x;
    for (auto& l : layers_) cur = l->forward(cur, training);
    return cur;
  }

  Tensor backward(const Tensor& g) override {
    Tensor cur = g;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      cur = (*it)->backward(cur);
    return cur;
  }

  void init(Rng& rng) override {
    for (auto& l : layers_) l->init(rng);
  }

  void collect(const std::string& p, std::vector<NamedParam>& out) override {
    for (size_t i = 0; i < layers_.size(); ++i)
      layers_[i]->collect(p + "." + std::to_string(i), out);
  }

  void summarize(ArchSummary& s) const override {
    for (const auto& l : layers_) l->summarize(s);
  }

  void set_trainable(bool t) override {
    trainable_ = t;
    for (auto& l : layers_) l->set_trainable(t);
  }

  size_t size() const { return layers_.size(); }
  Layer& layer(size_t i) { return *layers_[i]; }

 private:
  std::vector<LayerPtr> layers_;
};

// y = relu(main(x) + shortcut(x)); empty shortcut means identity.
class Residual : public Layer {
 public:
  Residual(std::unique_ptr<Sequential> main, std::unique_ptr<Sequential> shortcut = nullptr)
      : main_(std::move(main)), shortcut_(std::move(shortcut)) {}

  std::string kind() const override { return "residual"; }

  Tensor forward(const Tensor& x, bool training) override {
    Tensor a = main_->forward(x, training);
    Tensor b = shortcut_ ? shortcut_->forward(x, training) : x;
    if (!a.same_shape(b))
      throw ShapeMismatch(str_cat("residual: branch shapes ", a.shape_str(), " vs ",
                                  b.shape_str()));
    Tensor y(a.shape);
    mask_.resize(y.data.size());
    for (size_t i = 0; i < y.data.size(); ++i) {
      float s = a.data[i] + b.data[i];
      mask_[i] = s > 0.0f;
      y.data[i] = s > 0.0f ? s : 0.0f;
    }
    return y;
  }

  Tensor backward(const Tensor& g) override {
    Tensor gs = g;
    for (size_t i = 0; i < gs.data.size(); ++i)
      if (!mask_[i]) gs.data[i] = 0.0f;
    Tensor gx = main_->backward(gs);
    if (shortcut_) {
      Tensor g2 = shortcut_->backward(gs);
      for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g2.data[i];
    } else {
      for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gs.data[i];
    }
    return gx;
  }

  void init(Rng& rng) override {
    main_->init(rng);
    if (shortcut_) shortcut_->init(rng);
  }

  void collect(const std::string& p, std::vector<NamedParam>& out) override {
    main_->collect(p + ".main", out);
    if (shortcut_) shortcut_->collect(p + ".shortcut", out);
  }

  void summarize(ArchSummary& s) const override {
    main_->summarize(s);
    if (shortcut_) shortcut_->summarize(s);
  }

  void set_trainable(bool t) override {
    main_->set_trainable(t);
    if (shortcut_) shortcut_->set_trainable(t);
  }

 private:
  std::unique_ptr<Sequential> main_, shortcut_;
  std::vector<char> mask_;
};

// Inception-style parallel branches concatenated along channels.
class Concat : public Layer {
 public:
  explicit Concat(std::vector<std::unique_ptr<Sequential>> branches)
      : branches_(std::move(branches)) {}

  std::string kind() const override { return "concat"; }

  Tensor forward(const Tensor& x, bool training) override {
    outs_.clear();
    int total_c = 0;
    for (auto& b : branches_) {
      outs_.push_back(b->forward(x, training));
      total_c += outs_.back().dim(1);
    }
    const Tensor& first = outs_.front();
    const int n = first.dim(0), h = first.dim(2), w = first.dim(3);
    for (const Tensor& t : outs_)
      if (t.dim(0) != n || t.dim(2) != h || t.dim(3) != w)
        throw ShapeMismatch("concat: branch spatial shapes differ");
    Tensor y({n, total_c, h, w});
    const size_t hw = static_cast<size_t>(h) * w;
    for (int i = 0; i < n; ++i) {
      size_t off = 0;
      for (const Tensor& t : outs_) {
        const int c = t.dim(1);
        std::copy(t.ptr() + static_cast<size_t>(i) * c * hw,
                  t.ptr() + static_cast<size_t>(i + 1) * c * hw,
                  y.ptr() + (static_cast<size_t>(i) * total_c) * hw + off * hw);
        off += c;
      }
    }
    return y;
  }

  Tensor backward(const Tensor& g) override {
    const int n = g.dim(0), h = g.dim(2), w = g.dim(3);
    const size_t hw = static_cast<size_t>(h) * w;
    const int total_c = g.dim(1);
    Tensor gx;
    bool first_grad = true;
    size_t off = 0;
    for (size_t bi = 0; bi < branches_.size(); ++bi) {
      const int c = outs_[bi].dim(1);
      Tensor gpart({n, c, h, w});
      for (int i = 0; i < n; ++i)
        std::copy(g.ptr() + (static_cast<size_t>(i) * total_c + off) * hw,
                  g.ptr() + (static_cast<size_t>(i) * total_c + off + c) * hw,
                  gpart.ptr() + static_cast<size_t>(i) * c * hw);
      Tensor gb = branches_[bi]->backward(gpart);
      if (first_grad) {
        gx = std::move(gb);
        first_grad = false;
      } else {
        for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gb.data[i];
      }
      off += c;
    }
    return gx;
  }

  void init(Rng& rng) override {
    for (auto& b : branches_) b->init(rng);
  }

  void collect(const std::string& p, std::vector<NamedParam>& out) override {
    for (size_t i = 0; i < branches_.size(); ++i)
      branches_[i]->collect(p + ".branch" + std::to_string(i), out);
  }

  void summarize(ArchSummary& s) const override {
    for (const auto& b : branches_) b->summarize(s);
  }

  void set_trainable(bool t) override {
    for (auto& b : branches_) b->set_trainable(t);
  }

 private:
  std::vector<std::unique_ptr<Sequential>> branches_;
  std::vector<Tensor> outs_;
};

inline ArchSummary summarize(const Layer& root) {
  ArchSummary s;
  root.summarize(s);
  return s;
}

inline int64_t parameter_count(Layer& root) {
  std::vector<NamedParam> params;
  root.collect("p", params);
  int64_t n = 0;
  for (const NamedParam& p : params)
    if (p.grad != nullptr) n += p.value->numel();  // buffers excluded
  return n;
}

}  // namespace honk::nn

#endif  // HONK_NN_LAYERS_HPP_
