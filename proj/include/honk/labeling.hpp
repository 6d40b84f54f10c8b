// honk/labeling.hpp
//
// Semi-automatic annotation. Four per-class convolutional autoencoders
// produce a concatenated latent code Z = [Z0|Z1|Z2|Z3]; a small dense head
// over Z picks the class, and an amplitude gate demotes honk predictions on
// near-silent windows. A GAN variant fine-tunes per-class generators seeded
// from the trained decoders and is kept as an experimental alternative.

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

#ifndef HONK_LABELING_HPP_
#define HONK_LABELING_HPP_

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "honk/common.hpp"
#include "honk/dataset.hpp"
#include "honk/metrics.hpp"
#include "honk/nn/checkpoint.hpp"
#include "honk/nn/train.hpp"
#include "honk/rng.hpp"
#include "honk/spectrogram.hpp"

namespace honk {

struct MaeConfig {
  int latent_dim = 32;
  int input_size = 64;  // branch autoencoders see input_size^2 grayscale
  int min_samples = 50;
  int epochs = 25;
  int batch = 32;
  double lr = 1e-3;
  int head_epochs = 80;
  double head_lr = 1e-3;
  double amp_gate = 0.05;  // full-scale peak below which honk labels demote to 0
  uint64_t seed = 0;
};

// One sample as the labeler sees it: normalized grayscale image plus the
// source-window amplitude needed for the gate.
struct MaeSample {
  nn::Tensor image;  // [1, S, S]
  int label = -1;    // -1 while unlabeled
  std::optional<double> peak_amplitude;
  std::string file;
  int window = 0;
};

inline MaeSample make_mae_sample(const Spectrogram& spec, const MaeConfig& cfg,
                                 const LabeledSample* meta = nullptr) {
  MaeSample s;
  std::vector<float> gray = to_matrix(spec, cfg.input_size, cfg.input_size);
  s.image = nn::Tensor({1, cfg.input_size, cfg.input_size});
  s.image.data = std::move(gray);
  if (spec.window_meta) s.peak_amplitude = spec.window_meta->peak_amplitude;
  if (meta) {
    s.label = meta->label;
    s.file = meta->file;
    s.window = meta->window;
  } else if (spec.window_meta) {
    s.file = spec.window_meta->clip_ref;
    s.window = spec.window_meta->index;
  }
  return s;
}

struct ReconstructionLoss {
  double value = 0.0;  // mean squared error
  int64_t n = 0;       // sample count
};

// One branch of the multi-label autoencoder: three conv+pool encoder stages
// into a relu latent, mirrored decoder with a sigmoid output.
class BranchAutoencoder {
 public:
  BranchAutoencoder(int vclass, const MaeConfig& cfg)
      : vclass_(vclass), cfg_(cfg) {
    const int s = cfg.input_size;
    if (s % 8 != 0) throw ConfigError("labeling: input_size must be divisible by 8");
    const int s8 = s / 8;
    encoder_.emplace<nn::Conv2D>(1, 8, 3, nn::Conv2DOpts{.stride = 1, .pad = 1});
    encoder_.emplace<nn::ReLU>();
    encoder_.emplace<nn::MaxPool2D>(2);
    encoder_.emplace<nn::Conv2D>(8, 16, 3, nn::Conv2DOpts{.stride = 1, .pad = 1});
    encoder_.emplace<nn::ReLU>();
    encoder_.emplace<nn::MaxPool2D>(2);
    encoder_.emplace<nn::Conv2D>(16, 32, 3, nn::Conv2DOpts{.stride = 1, .pad = 1});
    encoder_.emplace<nn::ReLU>();
    encoder_.emplace<nn::MaxPool2D>(2);
    encoder_.emplace<nn::Flatten>();
    encoder_.emplace<nn::Dense>(32 * s8 * s8, cfg.latent_dim);
    encoder_.emplace<nn::ReLU>();

    decoder_.emplace<nn::Dense>(cfg.latent_dim, 32 * s8 * s8);
    decoder_.emplace<nn::ReLU>();
    decoder_.emplace<nn::Reshape>(32, s8, s8);
    decoder_.emplace<nn::Upsample2D>(2);
    decoder_.emplace<nn::Conv2D>(32, 16, 3, nn::Conv2DOpts{.stride = 1, .pad = 1});
    decoder_.emplace<nn::ReLU>();
    decoder_.emplace<nn::Upsample2D>(2);
    decoder_.emplace<nn::Conv2D>(16, 8, 3, nn::Conv2DOpts{.stride = 1, .pad = 1});
    decoder_.emplace<nn::ReLU>();
    decoder_.emplace<nn::Upsample2D>(2);
    decoder_.emplace<nn::Conv2D>(8, 1, 3, nn::Conv2DOpts{.stride = 1, .pad = 1});
    decoder_.emplace<nn::Sigmoid>();

    Rng rng(derive_seed(cfg.seed, 0xae00 + static_cast<uint64_t>(vclass)));
    encoder_.init(rng);
    decoder_.init(rng);
  }

  int vclass() const { return vclass_; }
  int latent_dim() const { return cfg_.latent_dim; }
  int input_size() const { return cfg_.input_size; }
  const std::vector<double>& loss_history() const { return loss_history_; }

  nn::Sequential& encoder() { return encoder_; }
  nn::Sequential& decoder() { return decoder_; }

  // [N,1,S,S] -> [N, latent]
  nn::Tensor encode(const nn::Tensor& x, bool training = false) {
    if (x.ndim() != 4 || x.dim(2) != cfg_.input_size || x.dim(3) != cfg_.input_size)
      throw ShapeMismatch(str_cat("labeling: branch expects [N,1,", cfg_.input_size, ",",
                                  cfg_.input_size, "], got ", x.shape_str()));
    return encoder_.forward(x, training);
  }

  nn::Tensor decode(const nn::Tensor& z, bool training = false) {
    return decoder_.forward(z, training);
  }

  // Eq.-style MSE of the reconstruction over a held batch.
  ReconstructionLoss reconstruction_loss(const nn::Tensor& x) {
    nn::Tensor xhat = decode(encode(x));
    ReconstructionLoss r;
    r.value = nn::mse_loss(xhat, x);
    r.n = x.dim(0);
    return r;
  }

  // Mini-batch Adam on the reconstruction MSE; per-epoch losses recorded.
  void train(const std::vector<const nn::Tensor*>& images) {
    std::vector<nn::NamedParam> params;
    encoder_.collect("encoder", params);
    decoder_.collect("decoder", params);
    nn::Adam opt(params, cfg_.lr);
    Rng shuffler(derive_seed(cfg_.seed, 0x7a11 + static_cast<uint64_t>(vclass_)));

    std::vector<size_t> order(images.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    loss_history_.clear();
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      shuffler.shuffle(order);
      double epoch_loss = 0.0;
      int64_t seen = 0;
      for (size_t start = 0; start < order.size(); start += cfg_.batch) {
        std::vector<const nn::Tensor*> batch_items;
        for (size_t i = start; i < std::min(order.size(), start + cfg_.batch); ++i)
          batch_items.push_back(images[order[i]]);
        nn::Tensor x = nn::stack(batch_items);
        opt.zero_grad();
        nn::Tensor xhat = decoder_.forward(encoder_.forward(x, true), true);
        nn::Tensor grad;
        const double loss = nn::mse_loss(xhat, x, &grad);
        encoder_.backward(decoder_.backward(grad));
        opt.step();
        epoch_loss += loss * batch_items.size();
        seen += static_cast<int64_t>(batch_items.size());
      }
      loss_history_.push_back(epoch_loss / static_cast<double>(seen));
    }
  }

 private:
  int vclass_;
  MaeConfig cfg_;
  nn::Sequential encoder_, decoder_;
  std::vector<double> loss_history_;
};

inline BranchAutoencoder train_branch_autoencoder(const std::vector<MaeSample>& samples,
                                                  int vclass, const MaeConfig& cfg) {
  std::vector<const nn::Tensor*> images;
  for (const MaeSample& s : samples)
    if (s.label == vclass) images.push_back(&s.image);
  if (static_cast<int>(images.size()) < cfg.min_samples)
    throw InsufficientSamples(str_cat("labeling: branch ", vclass, " has ",
                                      images.size(), " samples, needs ",
                                      cfg.min_samples));
  BranchAutoencoder branch(vclass, cfg);
  branch.train(images);
  return branch;
}

// Z = [Z0|Z1|Z2|Z3] for a batch: [N, 4*latent].
inline nn::Tensor encode_all(const nn::Tensor& x, std::vector<BranchAutoencoder>& branches) {
  if (branches.size() != kNumClasses)
    throw ShapeMismatch(str_cat("labeling: expected 4 branches, got ", branches.size()));
  const int latent = branches[0].latent_dim();
  for (BranchAutoencoder& b : branches)
    if (b.latent_dim() != latent)
      throw ShapeMismatch("labeling: branches disagree on latent_dim");
  const int n = x.dim(0);
  nn::Tensor z({n, kNumClasses * latent});
  for (int k = 0; k < kNumClasses; ++k) {
    nn::Tensor zk = branches[static_cast<size_t>(k)].encode(x);
    for (int i = 0; i < n; ++i)
      std::copy(zk.ptr() + static_cast<size_t>(i) * latent,
                zk.ptr() + static_cast<size_t>(i + 1) * latent,
                z.ptr() + static_cast<size_t>(i) * kNumClasses * latent + k * latent);
  }
  return z;
}

inline nn::Sequential make_latent_head(const MaeConfig& cfg) {
  nn::Sequential head;
  head.emplace<nn::Dense>(kNumClasses * cfg.latent_dim, 64);
  head.emplace<nn::ReLU>();
  head.emplace<nn::Dense>(64, kNumClasses);
  return head;
}

inline void train_latent_head(nn::Sequential& head, const nn::Tensor& z,
                              const std::vector<int>& labels, const MaeConfig& cfg) {
  std::vector<nn::NamedParam> params;
  head.collect("head", params);
  nn::Adam opt(params, cfg.head_lr);
  Rng shuffler(derive_seed(cfg.seed, 0x4ead));
  const int n = z.dim(0), d = z.dim(1);
  std::vector<size_t> order(static_cast<size_t>(n));
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < cfg.head_epochs; ++epoch) {
    shuffler.shuffle(order);
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t end = std::min(order.size(), start + cfg.batch);
      nn::Tensor xb({static_cast<int>(end - start), d});
      std::vector<int> yb;
      for (size_t i = start; i < end; ++i) {
        std::copy(z.ptr() + static_cast<size_t>(order[i]) * d,
                  z.ptr() + static_cast<size_t>(order[i] + 1) * d,
                  xb.ptr() + (i - start) * d);
        yb.push_back(labels[order[i]]);
      }
      opt.zero_grad();
      nn::XentResult res = nn::softmax_cross_entropy(head.forward(xb, true), yb);
      head.backward(res.grad);
      opt.step();
    }
  }
}

// Head probabilities for one sample image.
inline ClassProbabilities head_probabilities(const MaeSample& s,
                                             std::vector<BranchAutoencoder>& branches,
                                             nn::Sequential& head,
                                             const std::string& model_id = "mae") {
  std::vector<const nn::Tensor*> one{&s.image};
  nn::Tensor z = encode_all(nn::stack(one), branches);
  nn::Tensor logits = head.forward(z, false);
  nn::Softmax softmax;
  nn::Tensor probs = softmax.forward(logits, false);
  ClassProbabilities c;
  c.model_id = model_id;
  for (int k = 0; k < kNumClasses; ++k) c.p[static_cast<size_t>(k)] = probs.data[static_cast<size_t>(k)];
  return c;
}

struct GatedLabel {
  int label = 0;
  double confidence = 0.0;
};

// Argmax of the head probabilities, cross-checked against the source
// window's amplitude: a honk prediction on a window peaking below amp_gate
// is demoted to non-honk at half confidence. The gate only ever moves labels
// toward 0, never between honk classes.
inline GatedLabel apply_amplitude_gate(const ClassProbabilities& probs,
                                       std::optional<double> peak_amplitude,
                                       double amp_gate) {
  if (!peak_amplitude.has_value())
    throw MissingAmplitudeMetadata("labeling: sample lacks peak amplitude metadata");
  GatedLabel g;
  g.label = argmax_class(probs);
  g.confidence = probs.p[static_cast<size_t>(g.label)];
  if (g.label != kNonHonk && *peak_amplitude < amp_gate) {
    g.label = kNonHonk;
    g.confidence *= 0.5;
  }
  return g;
}

inline std::vector<LabeledSample> mae_label(const std::vector<MaeSample>& unlabeled,
                                            std::vector<BranchAutoencoder>& branches,
                                            nn::Sequential& head, double amp_gate,
                                            const std::string& provenance = "mae") {
  std::vector<LabeledSample> out;
  out.reserve(unlabeled.size());
  for (const MaeSample& s : unlabeled) {
    ClassProbabilities probs = head_probabilities(s, branches, head, provenance);
    GatedLabel g;
    try {
      g = apply_amplitude_gate(probs, s.peak_amplitude, amp_gate);
    } catch (const MissingAmplitudeMetadata&) {
      throw MissingAmplitudeMetadata(str_cat("labeling: sample ", s.file, "#", s.window,
                                             " lacks peak amplitude metadata"));
    }
    LabeledSample r;
    r.file = s.file;
    r.window = s.window;
    r.label = g.label;
    r.confidence = g.confidence;
    r.provenance = provenance;
    out.push_back(std::move(r));
  }
  return out;
}

// The full MAE labeler: four branches plus the latent head.
class MaeLabeler {
 public:
  explicit MaeLabeler(const MaeConfig& cfg) : cfg_(cfg), head_(make_latent_head(cfg)) {
    Rng rng(derive_seed(cfg.seed, 0x4ead5eedull));
    head_.init(rng);
  }

  const MaeConfig& config() const { return cfg_; }
  std::vector<BranchAutoencoder>& branches() { return branches_; }
  nn::Sequential& head() { return head_; }

  void train(const std::vector<MaeSample>& labeled) {
    branches_.clear();
    for (int k = 0; k < kNumClasses; ++k)
      branches_.push_back(train_branch_autoencoder(labeled, k, cfg_));
    fit_head(labeled);
  }

  void fit_head(const std::vector<MaeSample>& labeled) {
    std::vector<const nn::Tensor*> images;
    std::vector<int> labels;
    for (const MaeSample& s : labeled) {
      images.push_back(&s.image);
      labels.push_back(s.label);
    }
    nn::Tensor z = encode_all(nn::stack(images), branches_);
    head_ = make_latent_head(cfg_);
    Rng rng(derive_seed(cfg_.seed, 0x4ead5eedull));
    head_.init(rng);
    train_latent_head(head_, z, labels, cfg_);
  }

  std::vector<LabeledSample> label(const std::vector<MaeSample>& unlabeled) {
    require_trained();
    return mae_label(unlabeled, branches_, head_, cfg_.amp_gate, "mae");
  }

  // Incremental protocol: the unlabeled pool is split into n_groups chunks
  // labeled one after another; with refit_per_group the freshly labeled
  // chunk joins the training set and branches+head are refit before the
  // next chunk.
  std::vector<LabeledSample> label_in_groups(std::vector<MaeSample> unlabeled,
                                             const std::vector<MaeSample>& seed,
                                             int n_groups = 5,
                                             bool refit_per_group = true) {
    require_trained();
    std::vector<MaeSample> training = seed;
    std::vector<LabeledSample> out;
    const size_t group_size = (unlabeled.size() + n_groups - 1) / n_groups;
    for (size_t start = 0; start < unlabeled.size(); start += group_size) {
      const size_t end = std::min(unlabeled.size(), start + group_size);
      std::vector<MaeSample> group(unlabeled.begin() + start, unlabeled.begin() + end);
      std::vector<LabeledSample> labeled = label(group);
      for (size_t i = 0; i < group.size(); ++i) {
        out.push_back(labeled[i]);
        group[i].label = labeled[i].label;
      }
      if (refit_per_group && end < unlabeled.size()) {
        training.insert(training.end(), group.begin(), group.end());
        bool feasible = true;
        for (int k = 0; k < kNumClasses; ++k) {
          int count = 0;
          for (const MaeSample& s : training) count += (s.label == k);
          feasible = feasible && count >= cfg_.min_samples;
        }
        if (feasible) {
          branches_.clear();
          for (int k = 0; k < kNumClasses; ++k)
            branches_.push_back(train_branch_autoencoder(training, k, cfg_));
          fit_head(training);
        }
      }
    }
    return out;
  }

 private:
  void require_trained() const {
    if (branches_.size() != kNumClasses)
      throw DataError("labeling: MAE labeler is not trained");
  }

  MaeConfig cfg_;
  std::vector<BranchAutoencoder> branches_;
  nn::Sequential head_;
};

// --- annotator agreement ---

struct DisagreementReport {
  ConfusionMatrix table;  // rows: labels from a, cols: labels from b
  double dissimilarity = 0.0;
  int64_t matched = 0;
  int64_t unmatched = 0;
};

inline DisagreementReport disagreement_report(const std::vector<LabeledSample>& a,
                                              const std::vector<LabeledSample>& b) {
  std::map<std::string, int> b_by_id;
  for (const LabeledSample& s : b) b_by_id[s.id()] = s.label;
  DisagreementReport rep;
  for (const LabeledSample& s : a) {
    auto it = b_by_id.find(s.id());
    if (it == b_by_id.end()) {
      ++rep.unmatched;
      continue;
    }
    ++rep.table.counts[static_cast<size_t>(s.label)][static_cast<size_t>(it->second)];
    ++rep.matched;
  }
  if (rep.matched == 0) throw DataError("labeling: no overlapping sample ids to compare");
  rep.dissimilarity =
      static_cast<double>(rep.matched - rep.table.trace()) / static_cast<double>(rep.matched);
  return rep;
}

// --- MAEGAN (experimental; the MAE labeler above is the selected model) ---

struct MaeganConfig {
  int epochs = 6;
  int batch = 16;
  double gen_lr = 5e-5;
  double disc_lr = 2e-4;
  int generated_per_class = 48;  // synthetic latents fed back into the head fit
  int collapse_window = 5;
  double collapse_band = 0.02;
  uint64_t seed = 0;
};

namespace detail {

inline nn::Sequential make_discriminator(int input_size, Rng& rng) {
  const int s4 = input_size / 4;
  nn::Sequential d;
  d.emplace<nn::Conv2D>(1, 8, 3, nn::Conv2DOpts{.stride = 2, .pad = 1});
  d.emplace<nn::ReLU>();
  d.emplace<nn::Conv2D>(8, 16, 3, nn::Conv2DOpts{.stride = 2, .pad = 1});
  d.emplace<nn::ReLU>();
  d.emplace<nn::Flatten>();
  d.emplace<nn::Dense>(16 * s4 * s4, 1);
  d.init(rng);
  return d;
}

struct LatentPrior {
  std::vector<double> mean, stddev;

  nn::Tensor sample(int n, Rng& rng) const {
    nn::Tensor z({n, static_cast<int>(mean.size())});
    for (int i = 0; i < n; ++i)
      for (size_t j = 0; j < mean.size(); ++j)
        z.data[static_cast<size_t>(i) * mean.size() + j] =
            static_cast<float>(std::max(0.0, rng.normal(mean[j], stddev[j])));
    return z;
  }
};

inline LatentPrior fit_prior(const nn::Tensor& z) {
  const int n = z.dim(0), d = z.dim(1);
  LatentPrior p;
  p.mean.assign(static_cast<size_t>(d), 0.0);
  p.stddev.assign(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) p.mean[static_cast<size_t>(j)] += z.data[static_cast<size_t>(i) * d + j];
  for (int j = 0; j < d; ++j) p.mean[static_cast<size_t>(j)] /= n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      const double dd = z.data[static_cast<size_t>(i) * d + j] - p.mean[static_cast<size_t>(j)];
      p.stddev[static_cast<size_t>(j)] += dd * dd;
    }
  for (int j = 0; j < d; ++j)
    p.stddev[static_cast<size_t>(j)] = std::sqrt(p.stddev[static_cast<size_t>(j)] / std::max(1, n - 1)) + 1e-3;
  return p;
}

}  // namespace detail

// Adversarially fine-tuned variant. Generators G0-G3 start from the trained
// MAE decoders over per-class latent priors; discriminators D0-D3 are small
// convnets. After the adversarial phase the head is refit on real plus
// generated latents. Exposes the same labeling interface as the MAE.
class MaeganLabeler {
 public:
  MaeganLabeler(const MaeLabeler& mae, const MaeganConfig& gcfg)
      : cfg_(mae.config()), gcfg_(gcfg), head_(make_latent_head(cfg_)) {}

  MaeConfig& mae_config() { return cfg_; }
  std::vector<BranchAutoencoder>& branches() { return branches_; }
  std::vector<nn::Sequential>& generators() { return generators_; }
  nn::Sequential& head() { return head_; }
  const std::vector<std::vector<double>>& disc_accuracy_history() const {
    return disc_acc_;
  }

  nn::Tensor generate(int vclass, int n, Rng& rng) {
    nn::Tensor z = priors_[static_cast<size_t>(vclass)].sample(n, rng);
    return generators_[static_cast<size_t>(vclass)].forward(z, false);
  }

  std::vector<LabeledSample> label(const std::vector<MaeSample>& unlabeled) {
    return mae_label(unlabeled, branches_, head_, cfg_.amp_gate, "maegan");
  }

  friend MaeganLabeler train_maegan(MaeLabeler& mae, const std::vector<MaeSample>& seed,
                                    const MaeganConfig& gcfg);

 private:
  MaeConfig cfg_;
  MaeganConfig gcfg_;
  std::vector<BranchAutoencoder> branches_;
  std::vector<nn::Sequential> generators_;
  std::vector<detail::LatentPrior> priors_;
  nn::Sequential head_;
  std::vector<std::vector<double>> disc_acc_;
};

// Detects the spec'd abort condition: discriminator accuracy pinned inside
// 0.5 +/- band for `window` consecutive epochs.
inline bool mode_collapse_detected(const std::vector<double>& disc_accuracy,
                                   int window = 5, double band = 0.02) {
  int run = 0;
  for (double a : disc_accuracy) {
    run = (std::fabs(a - 0.5) <= band) ? run + 1 : 0;
    if (run >= window) return true;
  }
  return false;
}

inline MaeganLabeler train_maegan(MaeLabeler& mae, const std::vector<MaeSample>& seed,
                                  const MaeganConfig& gcfg) {
  if (mae.branches().size() != kNumClasses)
    throw DataError("labeling: train_maegan requires a trained MAE");
  MaeganLabeler gan(mae, gcfg);
  const MaeConfig& cfg = mae.config();

  // copy branch weights so adversarial updates leave the MAE intact
  for (int k = 0; k < kNumClasses; ++k) {
    gan.branches_.emplace_back(k, cfg);
    nn::copy_weights(mae.branches()[static_cast<size_t>(k)].encoder(),
                     gan.branches_.back().encoder());
    nn::copy_weights(mae.branches()[static_cast<size_t>(k)].decoder(),
                     gan.branches_.back().decoder());
  }

  Rng rng(derive_seed(gcfg.seed ^ cfg.seed, 0x6a6eull));
  gan.disc_acc_.assign(kNumClasses, {});
  for (int k = 0; k < kNumClasses; ++k) {
    std::vector<const nn::Tensor*> real;
    for (const MaeSample& s : seed)
      if (s.label == k) real.push_back(&s.image);
    if (real.empty())
      throw InsufficientSamples(str_cat("labeling: no class-", k, " seed samples for GAN"));

    // latent prior from the real samples through this branch's encoder
    nn::Tensor z_real = gan.branches_[static_cast<size_t>(k)].encode(nn::stack(real));
    gan.priors_.push_back(detail::fit_prior(z_real));

    // generator = decoder copy
    gan.generators_.emplace_back();
    nn::Sequential& gen = gan.generators_.back();
    {
      BranchAutoencoder proto(k, cfg);
      // structural clone of the decoder
      gan.generators_.back() = std::move(proto.decoder());
    }
    nn::copy_weights(gan.branches_[static_cast<size_t>(k)].decoder(), gen);

    nn::Sequential disc = detail::make_discriminator(cfg.input_size, rng);
    std::vector<nn::NamedParam> gp, dp;
    gen.collect("gen", gp);
    disc.collect("disc", dp);
    nn::Adam gen_opt(gp, gcfg.gen_lr);
    nn::Adam disc_opt(dp, gcfg.disc_lr);

    for (int epoch = 0; epoch < gcfg.epochs; ++epoch) {
      double correct = 0.0, total = 0.0;
      std::vector<size_t> order(real.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.shuffle(order);
      for (size_t start = 0; start < order.size(); start += gcfg.batch) {
        const size_t end = std::min(order.size(), start + gcfg.batch);
        std::vector<const nn::Tensor*> rb;
        for (size_t i = start; i < end; ++i) rb.push_back(real[order[i]]);
        const int nb = static_cast<int>(rb.size());
        nn::Tensor real_batch = nn::stack(rb);
        nn::Tensor fake_batch = gen.forward(
            gan.priors_[static_cast<size_t>(k)].sample(nb, rng), true);

        // discriminator step on real=1, fake=0
        disc_opt.zero_grad();
        nn::Tensor d_real = disc.forward(real_batch, true);
        nn::Tensor g1;
        bce_with_logits(d_real, std::vector<float>(static_cast<size_t>(nb), 1.0f), &g1);
        disc.backward(g1);
        nn::Tensor d_fake = disc.forward(fake_batch, true);
        nn::Tensor g0;
        bce_with_logits(d_fake, std::vector<float>(static_cast<size_t>(nb), 0.0f), &g0);
        disc.backward(g0);
        disc_opt.step();

        for (int i = 0; i < nb; ++i) {
          correct += (d_real.data[static_cast<size_t>(i)] > 0.0f) ? 1.0 : 0.0;
          correct += (d_fake.data[static_cast<size_t>(i)] <= 0.0f) ? 1.0 : 0.0;
          total += 2.0;
        }

        // generator step: non-saturating loss against fresh fakes
        gen_opt.zero_grad();
        nn::Tensor z = gan.priors_[static_cast<size_t>(k)].sample(nb, rng);
        nn::Tensor fake2 = gen.forward(z, true);
        nn::Tensor d_fake2 = disc.forward(fake2, true);
        nn::Tensor gg;
        bce_with_logits(d_fake2, std::vector<float>(static_cast<size_t>(nb), 1.0f), &gg);
        gen.backward(disc.backward(gg));
        gen_opt.step();
      }
      gan.disc_acc_[static_cast<size_t>(k)].push_back(correct / total);
      if (mode_collapse_detected(gan.disc_acc_[static_cast<size_t>(k)],
                                 gcfg.collapse_window, gcfg.collapse_band))
        throw ModeCollapseDetected(str_cat(
            "labeling: class-", k, " discriminator accuracy pinned at 0.5 for ",
            gcfg.collapse_window, " epochs (epoch ", epoch + 1, " of ", gcfg.epochs, ")"));
    }
  }

  // refit the head on real + generated latents
  std::vector<nn::Tensor> gen_images;
  std::vector<const nn::Tensor*> images;
  std::vector<int> labels;
  for (const MaeSample& s : seed) {
    images.push_back(&s.image);
    labels.push_back(s.label);
  }
  for (int k = 0; k < kNumClasses; ++k) {
    nn::Tensor g = gan.generate(k, gcfg.generated_per_class, rng);
    for (int i = 0; i < g.dim(0); ++i) {
      nn::Tensor one({1, cfg.input_size, cfg.input_size});
      std::copy(g.ptr() + static_cast<size_t>(i) * one.numel(),
                g.ptr() + static_cast<size_t>(i + 1) * one.numel(), one.ptr());
      gen_images.push_back(std::move(one));
      labels.push_back(k);
    }
  }
  for (const nn::Tensor& t : gen_images) images.push_back(&t);
  nn::Tensor z = encode_all(nn::stack(images), gan.branches_);
  gan.head_ = make_latent_head(cfg);
  Rng hrng(derive_seed(cfg.seed, 0x6a6e4eadull));
  gan.head_.init(hrng);
  train_latent_head(gan.head_, z, labels, cfg);
  return gan;
}

}  // namespace honk

#endif  // HONK_LABELING_HPP_
