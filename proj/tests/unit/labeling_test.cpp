// tests/unit/labeling_test.cpp

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

#include "honk/labeling.hpp"

#include <gtest/gtest.h>

#include <array>
#include <map>

#include "honk/synth.hpp"

namespace honk {
namespace {

MaeConfig small_config() {
  MaeConfig cfg;
  cfg.latent_dim = 16;
  cfg.input_size = 32;
  cfg.min_samples = 20;
  cfg.epochs = 8;
  cfg.batch = 16;
  cfg.head_epochs = 60;
  cfg.seed = 42;
  return cfg;
}

// Clean synthetic samples for one class: honks of the class model, or faint
// ambient noise for class 0.
std::vector<MaeSample> make_class_samples(int vclass, int count, const MaeConfig& cfg,
                                          uint64_t seed) {
  std::vector<MaeSample> out;
  for (int i = 0; i < count; ++i) {
    const uint64_t s = derive_seed(seed + vclass * 1000, i);
    AudioClip clip;
    if (vclass == kNonHonk) {
      clip.sample_rate = kCanonicalSampleRate;
      clip.samples = synth_noise(NoiseProfile::kWhite, 8000, s);
      for (float& v : clip.samples) v *= 0.01f;
    } else {
      HonkModel m = default_honk_model(vclass);
      m.dur_lo = 0.6;
      m.dur_hi = 0.95;
      clip = synth_honk(m, s);
      clip.samples.resize(8000, 0.0f);  // pad honk into a full 1-s window
    }
    Segmentation seg = segment(clip);
    Spectrogram spec = stft_spectrogram(seg.windows[0], clip.sample_rate);
    MaeSample ms = make_mae_sample(spec, cfg);
    ms.label = vclass;
    ms.file = str_cat("synthetic-", vclass, "-", i);
    out.push_back(std::move(ms));
  }
  return out;
}

std::vector<MaeSample> make_all_class_samples(int per_class, const MaeConfig& cfg,
                                              uint64_t seed) {
  std::vector<MaeSample> all;
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<MaeSample> cs = make_class_samples(c, per_class, cfg, seed);
    for (MaeSample& s : cs) all.push_back(std::move(s));
  }
  return all;
}

TEST(BranchAutoencoder, ConstantZeroImagesConvergeFast) {
  MaeConfig cfg = small_config();
  cfg.epochs = 100;  // 2 steps/epoch below -> 200 steps total
  cfg.batch = 25;
  cfg.lr = 0.05;
  cfg.min_samples = 50;
  std::vector<MaeSample> zeros(50);
  for (MaeSample& s : zeros) {
    s.image = nn::Tensor({1, cfg.input_size, cfg.input_size});
    s.label = 0;
  }
  BranchAutoencoder branch = train_branch_autoencoder(zeros, 0, cfg);
  ASSERT_FALSE(branch.loss_history().empty());
  EXPECT_LT(branch.loss_history().back(), 1e-3);
}

TEST(BranchAutoencoder, InsufficientSamplesThrows) {
  MaeConfig cfg = small_config();
  std::vector<MaeSample> few = make_class_samples(kLwv, 5, cfg, 1);
  EXPECT_THROW(train_branch_autoencoder(few, kLwv, cfg), InsufficientSamples);
}

TEST(BranchAutoencoder, LossNonincreasingWithinJitter) {
  MaeConfig cfg = small_config();
  cfg.epochs = 10;
  std::vector<MaeSample> samples = make_class_samples(kMwv, 30, cfg, 2);
  BranchAutoencoder branch = train_branch_autoencoder(samples, kMwv, cfg);
  const std::vector<double>& h = branch.loss_history();
  for (size_t e = 1; e < h.size(); ++e)
    EXPECT_LE(h[e], h[e - 1] * 1.05) << "epoch " << e;
}

TEST(BranchAutoencoder, SpecializationAcrossClasses) {
  MaeConfig cfg = small_config();
  cfg.epochs = 12;
  const int per_class = 40;
  std::vector<std::vector<MaeSample>> train_sets, eval_sets;
  for (int c = 0; c < kNumClasses; ++c) {
    train_sets.push_back(make_class_samples(c, per_class, cfg, 10));
    eval_sets.push_back(make_class_samples(c, 16, cfg, 11));
  }
  std::vector<BranchAutoencoder> branches;
  for (int c = 0; c < kNumClasses; ++c)
    branches.push_back(train_branch_autoencoder(train_sets[c], c, cfg));

  // median reconstruction MSE of branch k on class j
  std::array<std::array<double, 4>, 4> median_mse{};
  for (int k = 0; k < kNumClasses; ++k)
    for (int j = 0; j < kNumClasses; ++j) {
      std::vector<double> losses;
      for (const MaeSample& s : eval_sets[j]) {
        std::vector<const nn::Tensor*> one{&s.image};
        losses.push_back(branches[k].reconstruction_loss(nn::stack(one)).value);
      }
      std::sort(losses.begin(), losses.end());
      median_mse[k][j] = losses[losses.size() / 2];
    }
  for (int k = 0; k < kNumClasses; ++k)
    for (int j = 0; j < kNumClasses; ++j)
      if (j != k)
        EXPECT_LT(median_mse[k][k], median_mse[k][j])
            << "branch " << k << " not specialized against class " << j;
}

TEST(EncodeAll, ConcatenationLengthAndOrder) {
  MaeConfig cfg = small_config();
  std::vector<BranchAutoencoder> branches;
  for (int c = 0; c < kNumClasses; ++c) branches.emplace_back(c, cfg);

  Rng rng(5);
  nn::Tensor x({2, 1, cfg.input_size, cfg.input_size});
  for (float& v : x.data) v = static_cast<float>(rng.uniform());
  nn::Tensor z = encode_all(x, branches);
  EXPECT_EQ(z.shape, (std::vector<int>{2, 4 * cfg.latent_dim}));

  // permuting branch order permutes the corresponding Z segments
  std::swap(branches[0], branches[1]);
  nn::Tensor z2 = encode_all(x, branches);
  for (int i = 0; i < 2; ++i)
    for (int d = 0; d < cfg.latent_dim; ++d) {
      const size_t row = static_cast<size_t>(i) * 4 * cfg.latent_dim;
      EXPECT_EQ(z2.data[row + d], z.data[row + cfg.latent_dim + d]);
      EXPECT_EQ(z2.data[row + cfg.latent_dim + d], z.data[row + d]);
    }
}

TEST(EncodeAll, ZeroInputThroughFreshEncoderIsZero) {
  MaeConfig cfg = small_config();
  std::vector<BranchAutoencoder> branches;
  for (int c = 0; c < kNumClasses; ++c) branches.emplace_back(c, cfg);
  nn::Tensor x({1, 1, cfg.input_size, cfg.input_size});  // zeros; biases init to zero
  nn::Tensor z = encode_all(x, branches);
  for (float v : z.data) EXPECT_EQ(v, 0.0f);
}

TEST(EncodeAll, WrongBranchCountThrows) {
  MaeConfig cfg = small_config();
  std::vector<BranchAutoencoder> branches;
  branches.emplace_back(0, cfg);
  nn::Tensor x({1, 1, cfg.input_size, cfg.input_size});
  EXPECT_THROW(encode_all(x, branches), ShapeMismatch);
}

ClassProbabilities probs_of(double p0, double p1, double p2, double p3) {
  ClassProbabilities c;
  c.p = {p0, p1, p2, p3};
  return c;
}

TEST(AmplitudeGate, SpecExamples) {
  // loud window: argmax stands
  GatedLabel g = apply_amplitude_gate(probs_of(0.1, 0.7, 0.1, 0.1), 0.4, 0.05);
  EXPECT_EQ(g.label, 1);
  EXPECT_DOUBLE_EQ(g.confidence, 0.7);
  // near-silent window: demoted to non-honk at half confidence
  g = apply_amplitude_gate(probs_of(0.1, 0.7, 0.1, 0.1), 0.01, 0.05);
  EXPECT_EQ(g.label, 0);
  EXPECT_DOUBLE_EQ(g.confidence, 0.35);
  // non-honk predictions pass through the gate untouched
  g = apply_amplitude_gate(probs_of(0.9, 0.05, 0.03, 0.02), 0.0, 0.05);
  EXPECT_EQ(g.label, 0);
  EXPECT_DOUBLE_EQ(g.confidence, 0.9);
}

TEST(AmplitudeGate, OnlyMovesTowardZeroAndConfidenceBounded) {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    ClassProbabilities c;
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
      c.p[static_cast<size_t>(k)] = rng.uniform() + 1e-6;
      sum += c.p[static_cast<size_t>(k)];
    }
    for (int k = 0; k < 4; ++k) c.p[static_cast<size_t>(k)] /= sum;
    const int raw = argmax_class(c);
    GatedLabel g = apply_amplitude_gate(c, rng.uniform(0.0, 0.2), 0.05);
    EXPECT_TRUE(g.label == raw || g.label == kNonHonk);
    EXPECT_GE(g.confidence, 0.0);
    EXPECT_LE(g.confidence, 1.0);
  }
}

TEST(AmplitudeGate, MissingMetadataThrows) {
  EXPECT_THROW(apply_amplitude_gate(probs_of(0.1, 0.7, 0.1, 0.1), std::nullopt, 0.05),
               MissingAmplitudeMetadata);
}

TEST(MaeLabeler, LabelsCleanSyntheticCorpus) {
  MaeConfig cfg = small_config();
  MaeLabeler mae(cfg);
  mae.train(make_all_class_samples(40, cfg, 100));

  std::vector<MaeSample> eval = make_all_class_samples(15, cfg, 200);
  std::vector<MaeSample> unlabeled = eval;
  for (MaeSample& s : unlabeled) s.label = -1;
  std::vector<LabeledSample> labeled = mae.label(unlabeled);
  ASSERT_EQ(labeled.size(), eval.size());

  int correct = 0;
  for (size_t i = 0; i < eval.size(); ++i) {
    correct += (labeled[i].label == eval[i].label);
    EXPECT_EQ(labeled[i].provenance, "mae");
    EXPECT_GE(labeled[i].confidence, 0.0);
    EXPECT_LE(labeled[i].confidence, 1.0);
  }
  EXPECT_GE(static_cast<double>(correct) / eval.size(), 0.8);

  // determinism with frozen weights
  std::vector<LabeledSample> again = mae.label(unlabeled);
  for (size_t i = 0; i < labeled.size(); ++i) {
    EXPECT_EQ(labeled[i].label, again[i].label);
    EXPECT_DOUBLE_EQ(labeled[i].confidence, again[i].confidence);
  }
}

TEST(MaeLabeler, GroupedLabelingMatchesSchema) {
  MaeConfig cfg = small_config();
  cfg.epochs = 4;
  cfg.head_epochs = 30;
  MaeLabeler mae(cfg);
  std::vector<MaeSample> seed = make_all_class_samples(24, cfg, 300);
  mae.train(seed);
  std::vector<MaeSample> pool = make_all_class_samples(10, cfg, 400);
  for (MaeSample& s : pool) s.label = -1;
  std::vector<LabeledSample> labeled =
      mae.label_in_groups(pool, seed, 5, /*refit_per_group=*/true);
  EXPECT_EQ(labeled.size(), pool.size());
  for (const LabeledSample& s : labeled) EXPECT_EQ(s.provenance, "mae");
}

TEST(Disagreement, IdenticalListsZero) {
  std::vector<LabeledSample> a;
  for (int i = 0; i < 10; ++i) {
    LabeledSample s;
    s.file = "f" + std::to_string(i);
    s.label = i % 4;
    a.push_back(s);
  }
  DisagreementReport rep = disagreement_report(a, a);
  EXPECT_EQ(rep.matched, 10);
  EXPECT_DOUBLE_EQ(rep.dissimilarity, 0.0);
  EXPECT_EQ(rep.table.trace(), 10);
}

TEST(Disagreement, SingleDifferenceAmongTen) {
  std::vector<LabeledSample> a, b;
  for (int i = 0; i < 10; ++i) {
    LabeledSample s;
    s.file = "f" + std::to_string(i);
    s.label = 1;
    a.push_back(s);
    if (i == 4) s.label = 2;
    b.push_back(s);
  }
  DisagreementReport rep = disagreement_report(a, b);
  EXPECT_DOUBLE_EQ(rep.dissimilarity, 0.1);
  EXPECT_EQ(rep.table.counts[1][2], 1);
}

TEST(Disagreement, PublishedManualLabelFixture) {
  // Personnel-1 cross-tab from the study's manual-label table.
  const int64_t p1[4][4] = {{740, 11, 6, 3}, {1, 437, 10, 2}, {1, 11, 318, 10}, {0, 1, 5, 206}};
  // expand into two label lists sharing ids
  std::vector<LabeledSample> ref, ann;
  int id = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int64_t n = 0; n < p1[i][j]; ++n) {
        LabeledSample s;
        s.file = "s" + std::to_string(id++);
        s.label = i;
        ref.push_back(s);
        s.label = j;
        ann.push_back(s);
      }
  DisagreementReport rep = disagreement_report(ref, ann);
  EXPECT_EQ(rep.matched, 1762);
  EXPECT_NEAR(rep.dissimilarity, 61.0 / 1762.0, 1e-12);

  // The study's quoted "around 7%" total combines both personnel against the
  // 1694 kept samples: (61 + 58) / 1694.
  const double p2_offdiag = 58.0;
  const double total_kept = 1694.0;
  EXPECT_NEAR((61.0 + p2_offdiag) / total_kept, 0.0702, 5e-4);
}

TEST(ModeCollapse, DetectorFiresOnPinnedAccuracy) {
  EXPECT_TRUE(mode_collapse_detected({0.9, 0.51, 0.5, 0.49, 0.52, 0.5}, 5, 0.02));
  EXPECT_FALSE(mode_collapse_detected({0.9, 0.51, 0.5, 0.49, 0.9, 0.5, 0.5}, 5, 0.02));
  EXPECT_FALSE(mode_collapse_detected({0.8, 0.85, 0.9}, 5, 0.02));
}

TEST(Maegan, GeneratedSamplesClassConsistentWithMaeHead) {
  MaeConfig cfg = small_config();
  MaeLabeler mae(cfg);
  mae.train(make_all_class_samples(40, cfg, 500));

  MaeganConfig gcfg;
  gcfg.epochs = 4;
  gcfg.batch = 16;
  gcfg.seed = 9;
  MaeganLabeler gan = train_maegan(mae, make_all_class_samples(40, cfg, 500), gcfg);

  Rng rng(77);
  int correct = 0, total = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    nn::Tensor g = gan.generate(k, 12, rng);
    EXPECT_EQ(g.dim(1), 1);
    EXPECT_EQ(g.dim(2), cfg.input_size);
    EXPECT_EQ(g.dim(3), cfg.input_size);
    for (int i = 0; i < g.dim(0); ++i) {
      MaeSample s;
      s.image = nn::Tensor({1, cfg.input_size, cfg.input_size});
      std::copy(g.ptr() + static_cast<size_t>(i) * s.image.numel(),
                g.ptr() + static_cast<size_t>(i + 1) * s.image.numel(), s.image.ptr());
      ClassProbabilities p = head_probabilities(s, mae.branches(), mae.head());
      correct += (argmax_class(p) == k);
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(correct) / total, 0.7)
      << "generated spectrograms drifted off their class";
}

TEST(Maegan, InterfaceParityWithMae) {
  MaeConfig cfg = small_config();
  cfg.epochs = 4;
  cfg.head_epochs = 40;
  MaeLabeler mae(cfg);
  std::vector<MaeSample> seed = make_all_class_samples(24, cfg, 600);
  mae.train(seed);
  MaeganConfig gcfg;
  gcfg.epochs = 2;
  MaeganLabeler gan = train_maegan(mae, seed, gcfg);

  std::vector<MaeSample> pool = make_all_class_samples(4, cfg, 700);
  for (MaeSample& s : pool) s.label = -1;
  std::vector<LabeledSample> via_mae = mae.label(pool);
  std::vector<LabeledSample> via_gan = gan.label(pool);
  ASSERT_EQ(via_mae.size(), via_gan.size());
  for (size_t i = 0; i < via_mae.size(); ++i) {
    EXPECT_EQ(via_mae[i].file, via_gan[i].file);
    EXPECT_EQ(via_mae[i].window, via_gan[i].window);
    EXPECT_EQ(via_gan[i].provenance, "maegan");
  }
}

}  // namespace
}  // namespace honk
