// honk/models.hpp
//
// Classifier zoo: the desk-scale `tiny` backbone, four small look-alikes of
// the study's pre-trained architectures, the four published baselines with
// exact layer counts, a deterministic training loop, and the ensemble that
// sums member softmax vectors and takes the argmax.

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

#ifndef HONK_MODELS_HPP_
#define HONK_MODELS_HPP_

#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "honk/common.hpp"
#include "honk/metrics.hpp"
#include "honk/nn/checkpoint.hpp"
#include "honk/nn/train.hpp"
#include "honk/rng.hpp"

namespace honk {

struct TrainConfig {
  int epochs = 20;       // study protocol defaults
  double lr = 0.001;
  int batch = 312;
  int input_h = 224, input_w = 224, input_c = 3;
  uint64_t seed = 0;
  bool freeze = false;  // freeze features, train only the classification head
};

struct BackboneSpec {
  std::string name = "tiny";  // tiny | mobilenet-like | shufflenet-like |
                              // resnet50-like | inceptionv3-like
  std::string weights;        // empty = scratch init, else checkpoint path
};

// A feature extractor plus the added 4-way dense head. Emits softmax
// probabilities; training runs on the logits.
class Classifier {
 public:
  Classifier(std::string id, nn::Sequential features, nn::Sequential head)
      : id_(std::move(id)), features_(std::move(features)), head_(std::move(head)) {}

  const std::string& id() const { return id_; }
  nn::Sequential& features() { return features_; }
  nn::Sequential& head() { return head_; }
  const char* final_activation() const { return "softmax"; }

  void init(uint64_t seed) {
    Rng rng(mix64(seed));
    features_.init(rng);
    head_.init(rng);
  }

  void set_freeze_features(bool freeze) { features_.set_trainable(!freeze); }

  std::vector<nn::NamedParam> params() {
    std::vector<nn::NamedParam> p;
    features_.collect("features", p);
    head_.collect("head", p);
    return p;
  }

  nn::Tensor forward_logits(const nn::Tensor& batch, bool training) {
    return head_.forward(features_.forward(batch, training), training);
  }

  void backward(const nn::Tensor& grad) { features_.backward(head_.backward(grad)); }

  // single image [C,H,W] -> softmax probabilities
  ClassProbabilities predict(const nn::Tensor& image) {
    std::vector<const nn::Tensor*> one{&image};
    nn::Tensor logits = forward_logits(nn::stack(one), false);
    ClassProbabilities out;
    out.model_id = id_;
    double mx = logits.data[0];
    for (int k = 1; k < kNumClasses; ++k)
      mx = std::max(mx, static_cast<double>(logits.data[static_cast<size_t>(k)]));
    double sum = 0.0;
    for (int k = 0; k < kNumClasses; ++k) {
      out.p[static_cast<size_t>(k)] = std::exp(static_cast<double>(logits.data[static_cast<size_t>(k)]) - mx);
      sum += out.p[static_cast<size_t>(k)];
    }
    for (int k = 0; k < kNumClasses; ++k) out.p[static_cast<size_t>(k)] /= sum;
    return out;
  }

  nn::ArchSummary summary() {
    nn::ArchSummary s;
    features_.summarize(s);
    head_.summarize(s);
    return s;
  }

  int64_t parameter_count() {
    return nn::parameter_count(features_) + nn::parameter_count(head_);
  }

  void save(const std::string& path) {
    std::vector<nn::NamedParam> p = params();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("models: cannot write " + path);
    f.write(nn::kCkptMagic, 8);
    write_le<uint32_t>(f, 1);
    write_le<uint32_t>(f, static_cast<uint32_t>(p.size()));
    for (const nn::NamedParam& np : p) {
      write_le<uint32_t>(f, static_cast<uint32_t>(np.name.size()));
      f.write(np.name.data(), static_cast<std::streamsize>(np.name.size()));
      write_le<uint32_t>(f, static_cast<uint32_t>(np.value->shape.size()));
      for (int d : np.value->shape) write_le<int32_t>(f, d);
      for (float v : np.value->data) write_le<float>(f, v);
    }
  }

  void load(const std::string& path) {
    std::vector<nn::NamedParam> p = params();
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("models: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::string_view(magic, 8) != std::string_view(nn::kCkptMagic, 8))
      throw CorruptHeader("models: bad checkpoint magic in " + path);
    if (read_le<uint32_t>(f) != 1)
      throw UnsupportedFormat("models: unknown checkpoint version in " + path);
    const uint32_t count = read_le<uint32_t>(f);
    if (count != p.size())
      throw WeightManifestMismatch(str_cat("models: checkpoint ", path, " holds ", count,
                                           " tensors, ", id_, " expects ", p.size()));
    for (nn::NamedParam& np : p) {
      const uint32_t len = read_le<uint32_t>(f);
      std::string name(len, '\0');
      f.read(name.data(), len);
      const uint32_t ndim = read_le<uint32_t>(f);
      std::vector<int> shape(ndim);
      for (uint32_t i = 0; i < ndim; ++i) shape[i] = read_le<int32_t>(f);
      if (name != np.name || shape != np.value->shape)
        throw WeightManifestMismatch(str_cat("models: checkpoint tensor '", name, "' ",
                                             nn::Tensor::shape_str(shape),
                                             " does not match model tensor '", np.name,
                                             "' ", np.value->shape_str()));
      for (float& v : np.value->data) v = read_le<float>(f);
    }
    if (!f) throw CorruptHeader("models: truncated checkpoint " + path);
  }

 private:
  std::string id_;
  nn::Sequential features_, head_;
};

namespace arch {

using nn::Conv2DOpts;

inline std::unique_ptr<nn::Sequential> seq() { return std::make_unique<nn::Sequential>(); }

inline nn::Sequential tiny_features() {
  nn::Sequential f;
  f.emplace<nn::Conv2D>(3, 8, 5, Conv2DOpts{.stride = 4, .pad = 2});   // 224 -> 56
  f.emplace<nn::BatchNorm2D>(8);
  f.emplace<nn::ReLU>();
  f.emplace<nn::MaxPool2D>(2);                                          // 28
  f.emplace<nn::Conv2D>(8, 16, 3, Conv2DOpts{.stride = 1, .pad = 1});
  f.emplace<nn::BatchNorm2D>(16);
  f.emplace<nn::ReLU>();
  f.emplace<nn::MaxPool2D>(2);                                          // 14
  f.emplace<nn::Conv2D>(16, 32, 3, Conv2DOpts{.stride = 1, .pad = 1});
  f.emplace<nn::BatchNorm2D>(32);
  f.emplace<nn::ReLU>();
  f.emplace<nn::GlobalAvgPool>();
  return f;
}

inline nn::Sequential mobilenet_like_features() {
  nn::Sequential f;
  f.emplace<nn::Conv2D>(3, 8, 3, Conv2DOpts{.stride = 2, .pad = 1});  // 112
  f.emplace<nn::BatchNorm2D>(8);
  f.emplace<nn::ReLU>();
  int c = 8;
  for (int stage = 0; stage < 4; ++stage) {  // depthwise separable stacks
    f.emplace<nn::Conv2D>(c, c, 3, Conv2DOpts{.stride = 2, .pad = 1, .groups = c});
    f.emplace<nn::BatchNorm2D>(c);
    f.emplace<nn::ReLU>();
    const int next = stage < 3 ? c * 2 : c;
    f.emplace<nn::Conv2D>(c, next, 1, Conv2DOpts{});
    f.emplace<nn::BatchNorm2D>(next);
    f.emplace<nn::ReLU>();
    c = next;
  }
  f.emplace<nn::GlobalAvgPool>();  // 64 features
  return f;
}

inline nn::Sequential shufflenet_like_features() {
  nn::Sequential f;
  f.emplace<nn::Conv2D>(3, 12, 3, Conv2DOpts{.stride = 2, .pad = 1});  // 112
  f.emplace<nn::BatchNorm2D>(12);
  f.emplace<nn::ReLU>();
  f.emplace<nn::MaxPool2D>(2);  // 56
  int c = 12;
  for (int stage = 0; stage < 2; ++stage) {
    f.emplace<nn::Conv2D>(c, c, 1, Conv2DOpts{.groups = 3});  // grouped pointwise
    f.emplace<nn::ReLU>();
    f.emplace<nn::ChannelShuffle>(3);
    f.emplace<nn::Conv2D>(c, c, 3, Conv2DOpts{.stride = 2, .pad = 1, .groups = c});
    f.emplace<nn::BatchNorm2D>(c);
    f.emplace<nn::Conv2D>(c, c * 2, 1, Conv2DOpts{.groups = 3});
    f.emplace<nn::BatchNorm2D>(c * 2);
    f.emplace<nn::ReLU>();
    c *= 2;
  }
  f.emplace<nn::GlobalAvgPool>();  // 48 features
  return f;
}

inline std::unique_ptr<nn::Sequential> bottleneck_main(int in_c, int mid_c, int out_c,
                                                       int stride) {
  auto m = seq();
  m->emplace<nn::Conv2D>(in_c, mid_c, 1, Conv2DOpts{});
  m->emplace<nn::BatchNorm2D>(mid_c);
  m->emplace<nn::ReLU>();
  m->emplace<nn::Conv2D>(mid_c, mid_c, 3, Conv2DOpts{.stride = stride, .pad = 1});
  m->emplace<nn::BatchNorm2D>(mid_c);
  m->emplace<nn::ReLU>();
  m->emplace<nn::Conv2D>(mid_c, out_c, 1, Conv2DOpts{});
  m->emplace<nn::BatchNorm2D>(out_c);
  return m;
}

inline nn::Sequential resnet50_like_features() {
  nn::Sequential f;
  f.emplace<nn::Conv2D>(3, 16, 7, Conv2DOpts{.stride = 4, .pad = 3});  // 56
  f.emplace<nn::BatchNorm2D>(16);
  f.emplace<nn::ReLU>();
  f.emplace<nn::MaxPool2D>(2);  // 28

  auto s1 = seq();
  s1->emplace<nn::Conv2D>(16, 32, 1, Conv2DOpts{.stride = 2});
  s1->emplace<nn::BatchNorm2D>(32);
  f.add(std::make_unique<nn::Residual>(bottleneck_main(16, 8, 32, 2), std::move(s1)));  // 14

  f.add(std::make_unique<nn::Residual>(bottleneck_main(32, 8, 32, 1), nullptr));

  auto s3 = seq();
  s3->emplace<nn::Conv2D>(32, 64, 1, Conv2DOpts{.stride = 2});
  s3->emplace<nn::BatchNorm2D>(64);
  f.add(std::make_unique<nn::Residual>(bottleneck_main(32, 16, 64, 2), std::move(s3)));  // 7

  f.emplace<nn::GlobalAvgPool>();  // 64 features
  return f;
}

inline std::unique_ptr<nn::Sequential> inception_branch(
    std::initializer_list<std::tuple<int, int, int, int, int>> convs) {
  // tuple: in, out, k, pad, dilation
  auto b = seq();
  for (auto [in, out, k, pad, dil] : convs) {
    b->emplace<nn::Conv2D>(in, out, k, Conv2DOpts{.stride = 1, .pad = pad, .dilation = dil});
    b->emplace<nn::BatchNorm2D>(out);
    b->emplace<nn::ReLU>();
  }
  return b;
}

inline nn::Sequential inceptionv3_like_features() {
  nn::Sequential f;
  f.emplace<nn::Conv2D>(3, 12, 3, Conv2DOpts{.stride = 2, .pad = 1});  // 112
  f.emplace<nn::BatchNorm2D>(12);
  f.emplace<nn::ReLU>();
  f.emplace<nn::MaxPool2D>(2);  // 56
  f.emplace<nn::Conv2D>(12, 16, 3, Conv2DOpts{.stride = 2, .pad = 1});  // 28
  f.emplace<nn::BatchNorm2D>(16);
  f.emplace<nn::ReLU>();

  {
    std::vector<std::unique_ptr<nn::Sequential>> branches;
    branches.push_back(inception_branch({{16, 8, 1, 0, 1}}));
    branches.push_back(inception_branch({{16, 8, 1, 0, 1}, {8, 8, 3, 1, 1}}));
    branches.push_back(inception_branch({{16, 4, 1, 0, 1}, {4, 4, 5, 2, 1}}));
    branches.push_back(inception_branch({{16, 4, 1, 0, 1}}));
    f.add(std::make_unique<nn::Concat>(std::move(branches)));  // 24 channels
  }
  f.emplace<nn::MaxPool2D>(2);  // 14
  {
    std::vector<std::unique_ptr<nn::Sequential>> branches;
    branches.push_back(inception_branch({{24, 12, 1, 0, 1}}));
    branches.push_back(inception_branch({{24, 8, 1, 0, 1}, {8, 8, 3, 1, 1}}));
    branches.push_back(inception_branch({{24, 8, 1, 0, 1}, {8, 8, 3, 2, 2}}));
    branches.push_back(inception_branch({{24, 4, 1, 0, 1}}));
    f.add(std::make_unique<nn::Concat>(std::move(branches)));  // 32 channels
  }
  f.emplace<nn::MaxPool2D>(2);  // 7
  f.emplace<nn::GlobalAvgPool>();  // 32 features
  return f;
}

inline nn::Sequential dense_head(int in_features) {
  nn::Sequential h;
  h.emplace<nn::Dense>(in_features, kNumClasses, /*init_scale=*/0.01f);
  return h;
}

}  // namespace arch

// Builds one of the named backbones. External weights load through the
// shape-manifest checkpoint and must match exactly.
inline Classifier build_backbone(const BackboneSpec& spec, uint64_t seed = 0) {
  nn::Sequential features;
  int feat_dim = 0;
  if (spec.name == "tiny") {
    features = arch::tiny_features();
    feat_dim = 32;
  } else if (spec.name == "mobilenet-like") {
    features = arch::mobilenet_like_features();
    feat_dim = 64;
  } else if (spec.name == "shufflenet-like") {
    features = arch::shufflenet_like_features();
    feat_dim = 48;
  } else if (spec.name == "resnet50-like") {
    features = arch::resnet50_like_features();
    feat_dim = 64;
  } else if (spec.name == "inceptionv3-like") {
    features = arch::inceptionv3_like_features();
    feat_dim = 32;
  } else {
    throw ConfigError("models: unknown backbone '" + spec.name + "'");
  }
  Classifier c(spec.name, std::move(features), arch::dense_head(feat_dim));
  c.init(seed);
  if (!spec.weights.empty()) c.load(spec.weights);
  return c;
}

// The four published baselines; layer counts match their specification table
// (conv / max-pool / upsample / dense / batch-norm): SB-CNN 3/2/0/3/3,
// DilatedCNN 5/1/2/3/0, CNN 6/3/0/2/0, TFCNN 3/2/0/2/0.
inline Classifier build_baseline(const std::string& name, uint64_t seed = 0) {
  using nn::Conv2DOpts;
  nn::Sequential f;
  nn::Sequential head;
  if (name == "SB-CNN") {
    f.emplace<nn::Conv2D>(3, 8, 5, Conv2DOpts{.stride = 4, .pad = 2});  // 56
    f.emplace<nn::BatchNorm2D>(8);
    f.emplace<nn::ReLU>();
    f.emplace<nn::MaxPool2D>(2);  // 28
    f.emplace<nn::Conv2D>(8, 16, 3, Conv2DOpts{.stride = 1, .pad = 1});
    f.emplace<nn::BatchNorm2D>(16);
    f.emplace<nn::ReLU>();
    f.emplace<nn::MaxPool2D>(2);  // 14
    f.emplace<nn::Conv2D>(16, 24, 3, Conv2DOpts{.stride = 1, .pad = 1});
    f.emplace<nn::BatchNorm2D>(24);
    f.emplace<nn::ReLU>();
    f.emplace<nn::Flatten>();
    f.emplace<nn::Dense>(24 * 14 * 14, 64);
    f.emplace<nn::ReLU>();
    f.emplace<nn::Dense>(64, 32);
    f.emplace<nn::ReLU>();
    head.emplace<nn::Dense>(32, kNumClasses, 0.01f);
  } else if (name == "DilatedCNN") {
    f.emplace<nn::Conv2D>(3, 8, 5, Conv2DOpts{.stride = 4, .pad = 2});  // 56
    f.emplace<nn::ReLU>();
    f.emplace<nn::Conv2D>(8, 16, 3, Conv2DOpts{.stride = 2, .pad = 1});  // 28
    f.emplace<nn::ReLU>();
    f.emplace<nn::Conv2D>(16, 16, 3, Conv2DOpts{.stride = 1, .pad = 2, .dilation = 2});
    f.emplace<nn::ReLU>();
    f.emplace<nn::MaxPool2D>(2);  // 14
    f.emplace<nn::Conv2D>(16, 16, 3, Conv2DOpts{.stride = 1, .pad = 2, .dilation = 2});
    f.emplace<nn::ReLU>();
    f.emplace<nn::Upsample2D>(2);  // 28
    f.emplace<nn::Conv2D>(16, 8, 3, Conv2DOpts{.stride = 1, .pad = 1});
    f.emplace<nn::ReLU>();
    f.emplace<nn::Upsample2D>(2);  // 56
    f.emplace<nn::GlobalAvgPool>();
    f.emplace<nn::Dense>(8, 64);
    f.emplace<nn::ReLU>();
    f.emplace<nn::Dense>(64, 32);
    f.emplace<nn::ReLU>();
    head.emplace<nn::Dense>(32, kNumClasses, 0.01f);
  } else if (name == "CNN") {
    f.emplace<nn::Conv2D>(3, 8, 3, Conv2DOpts{.stride = 2, .pad = 1});  // 112
    f.emplace<nn::ReLU>();
    f.emplace<nn::Conv2D>(8, 8, 3, Conv2DOpts{.stride = 1, .pad = 1});
    f.emplace<nn::ReLU>();
    f.emplace<nn::MaxPool2D>(2);  // 56
    f.emplace<nn::Conv2D>(8, 16, 3, Conv2DOpts{.stride = 1, .pad = 1});
    f.emplace<nn::ReLU>();
    f.emplace<nn::Conv2D>(16, 16, 3, Conv2DOpts{.stride = 1, .pad = 1});
    f.emplace<nn::ReLU>();
    f.emplace<nn::MaxPool2D>(2);  // 28
    f.emplace<nn::Conv2D>(16, 32, 3, Conv2DOpts{.stride = 1, .pad = 1});
    f.emplace<nn::ReLU>();
    f.emplace<nn::Conv2D>(32, 32, 3, Conv2DOpts{.stride = 1, .pad = 1});
    f.emplace<nn::ReLU>();
    f.emplace<nn::MaxPool2D>(2);  // 14
    f.emplace<nn::Flatten>();
    f.emplace<nn::Dense>(32 * 14 * 14, 64);
    f.emplace<nn::ReLU>();
    head.emplace<nn::Dense>(64, kNumClasses, 0.01f);
  } else if (name == "TFCNN") {
    f.emplace<nn::Conv2D>(3, 8, 5, Conv2DOpts{.stride = 4, .pad = 2});  // 56
    f.emplace<nn::ReLU>();
    f.emplace<nn::MaxPool2D>(2);  // 28
    f.emplace<nn::Conv2D>(8, 16, 3, Conv2DOpts{.stride = 1, .pad = 1});
    f.emplace<nn::ReLU>();
    f.emplace<nn::MaxPool2D>(2);  // 14
    f.emplace<nn::Conv2D>(16, 32, 3, Conv2DOpts{.stride = 1, .pad = 1});
    f.emplace<nn::ReLU>();
    f.emplace<nn::Flatten>();
    f.emplace<nn::Dense>(32 * 14 * 14, 64);
    f.emplace<nn::ReLU>();
    head.emplace<nn::Dense>(64, kNumClasses, 0.01f);
  } else {
    throw ConfigError("models: unknown baseline '" + name + "'");
  }
  Classifier c(name, std::move(f), std::move(head));
  c.init(seed);
  return c;
}

// --- training ---

struct ImageDataset {
  std::vector<nn::Tensor> images;  // each [C,H,W]
  std::vector<int> labels;

  size_t size() const { return images.size(); }
};

struct TrainHistory {
  std::vector<double> loss;      // per epoch
  std::vector<double> accuracy;  // training accuracy per epoch
};

inline TrainHistory train(Classifier& model, const ImageDataset& data,
                          const TrainConfig& cfg) {
  if (data.size() == 0) throw DataError("models: empty training set");
  model.set_freeze_features(cfg.freeze);
  nn::Adam opt(model.params(), cfg.lr);
  Rng shuffler(derive_seed(cfg.seed, 0x7261696eull));
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainHistory hist;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffler.shuffle(order);
    double epoch_loss = 0.0;
    int64_t correct = 0, seen = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t end = std::min(order.size(), start + cfg.batch);
      std::vector<const nn::Tensor*> items;
      std::vector<int> labels;
      for (size_t i = start; i < end; ++i) {
        items.push_back(&data.images[order[i]]);
        labels.push_back(data.labels[order[i]]);
      }
      nn::Tensor batch = nn::stack(items);
      opt.zero_grad();
      nn::Tensor logits = model.forward_logits(batch, true);
      nn::XentResult res = nn::softmax_cross_entropy(logits, labels);
      if (!std::isfinite(res.loss))
        throw DivergedLoss(str_cat("models: ", model.id(), " loss became ", res.loss,
                                   " at epoch ", epoch + 1, " (lr=", cfg.lr,
                                   ", batch=", cfg.batch, ")"));
      model.backward(res.grad);
      opt.step();

      epoch_loss += res.loss * static_cast<double>(labels.size());
      for (size_t i = 0; i < labels.size(); ++i) {
        int best = 0;
        for (int k = 1; k < kNumClasses; ++k)
          if (res.probs.data[i * kNumClasses + static_cast<size_t>(k)] >
              res.probs.data[i * kNumClasses + static_cast<size_t>(best)])
            best = k;
        correct += (best == labels[i]);
      }
      seen += static_cast<int64_t>(labels.size());
    }
    hist.loss.push_back(epoch_loss / static_cast<double>(seen));
    hist.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(seen));
  }
  return hist;
}

// --- EnTL ensemble ---

struct EnsembleDecision {
  int final_class = 0;
  std::array<double, kNumClasses> scores{};  // element-wise sum of member vectors
  bool tie = false;
};

// Core combination rule: sum the per-class probabilities over members and
// take the argmax; ties resolve toward the lower class index.
inline EnsembleDecision entl_combine(const std::vector<ClassProbabilities>& members) {
  if (members.size() < 2)
    throw DataError(str_cat("models: ensemble needs at least 2 members, got ",
                            members.size()));
  EnsembleDecision d;
  for (const ClassProbabilities& m : members) {
    m.validate();
    for (int k = 0; k < kNumClasses; ++k) d.scores[static_cast<size_t>(k)] += m.p[static_cast<size_t>(k)];
  }
  for (int k = 1; k < kNumClasses; ++k) {
    if (d.scores[static_cast<size_t>(k)] > d.scores[static_cast<size_t>(d.final_class)]) d.final_class = k;
  }
  for (int k = 0; k < kNumClasses; ++k)
    if (k != d.final_class && d.scores[static_cast<size_t>(k)] == d.scores[static_cast<size_t>(d.final_class)])
      d.tie = true;
  return d;
}

struct Ensemble {
  std::vector<Classifier> members;
  std::vector<TrainHistory> histories;
  nlohmann::json manifest;  // member ids, seeds, bootstrap hashes

  EnsembleDecision predict(const nn::Tensor& image) {
    std::vector<ClassProbabilities> probs;
    for (Classifier& m : members) probs.push_back(m.predict(image));
    return entl_combine(probs);
  }
};

inline EnsembleDecision entl_predict(const nn::Tensor& image,
                                     std::vector<Classifier>& members) {
  std::vector<ClassProbabilities> probs;
  probs.reserve(members.size());
  for (Classifier& m : members) probs.push_back(m.predict(image));
  return entl_combine(probs);
}

// Full-size bootstrap resample (bagging); `partition` switches to disjoint
// shuffled chunks instead.
inline std::vector<size_t> bootstrap_indices(size_t n, uint64_t seed) {
  Rng rng(mix64(seed));
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i)
    idx[i] = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(n) - 1));
  return idx;
}

inline Ensemble entl_train(const ImageDataset& data, const TrainConfig& cfg,
                           const std::vector<BackboneSpec>& member_specs,
                           bool partition = false) {
  if (member_specs.size() < 2)
    throw ConfigError("models: ensemble needs at least 2 member specs");
  Ensemble ens;
  ens.manifest["members"] = nlohmann::json::array();

  std::vector<size_t> partition_order(data.size());
  for (size_t i = 0; i < partition_order.size(); ++i) partition_order[i] = i;
  Rng part_rng(derive_seed(cfg.seed, 0x9a97ull));
  part_rng.shuffle(partition_order);

  for (size_t m = 0; m < member_specs.size(); ++m) {
    const uint64_t member_seed = derive_seed(cfg.seed, 0xe5e5ull + m);
    std::vector<size_t> idx;
    if (partition) {
      const size_t chunk = data.size() / member_specs.size();
      const size_t lo = m * chunk;
      const size_t hi = (m + 1 == member_specs.size()) ? data.size() : lo + chunk;
      idx.assign(partition_order.begin() + static_cast<std::ptrdiff_t>(lo),
                 partition_order.begin() + static_cast<std::ptrdiff_t>(hi));
    } else {
      idx = bootstrap_indices(data.size(), member_seed);
    }

    ImageDataset resample;
    resample.images.reserve(idx.size());
    for (size_t i : idx) {
      resample.images.push_back(data.images[i]);
      resample.labels.push_back(data.labels[i]);
    }

    std::string idx_bytes(reinterpret_cast<const char*>(idx.data()),
                          idx.size() * sizeof(size_t));
    Classifier member = build_backbone(member_specs[m], member_seed);
    TrainConfig member_cfg = cfg;
    member_cfg.seed = member_seed;
    TrainHistory hist = train(member, resample, member_cfg);

    nlohmann::json mj;
    mj["id"] = str_cat(member.id(), "-", m);
    mj["arch"] = member_specs[m].name;
    mj["seed"] = member_seed;
    mj["resample"] = partition ? "partition" : "bootstrap";
    mj["resample_size"] = idx.size();
    mj["bootstrap_hash"] = hex64(fnv1a64(idx_bytes));
    ens.manifest["members"].push_back(mj);
    ens.members.push_back(std::move(member));
    ens.histories.push_back(std::move(hist));
  }
  return ens;
}

}  // namespace honk

#endif  // HONK_MODELS_HPP_
