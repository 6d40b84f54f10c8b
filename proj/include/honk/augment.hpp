// honk/augment.hpp
//
// Spectrogram-domain augmentation (time/frequency masking) plus class
// balancing and the stratified train/test split.

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

#ifndef HONK_AUGMENT_HPP_
#define HONK_AUGMENT_HPP_

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "honk/common.hpp"
#include "honk/dataset.hpp"
#include "honk/rng.hpp"
#include "honk/spectrogram.hpp"

namespace honk {

struct MaskRange {
  char axis = 't';  // 't' = time frames, 'f' = frequency bins
  int start = 0;
  int width = 0;
};

struct AugmentResult {
  Spectrogram spec;
  std::vector<MaskRange> masks;
};

namespace detail {

// Masks contiguous COLUMN ranges of a row-major matrix with the matrix mean.
// Both public masking ops funnel through this so that freq_mask on a matrix
// equals time_mask on its transpose under the same seed.
inline std::vector<MaskRange> mask_columns(std::vector<float>& m, int rows, int cols,
                                           std::pair<int, int> n_masks,
                                           double max_width_frac, Rng& rng, char axis) {
  if (max_width_frac < 0.0 || max_width_frac > 1.0)
    throw MaskWiderThanAxis(str_cat("augment: max_width_frac ", max_width_frac,
                                    " outside [0, 1]"));
  if (n_masks.first < 0 || n_masks.second < n_masks.first)
    throw ConfigError("augment: invalid mask count range");

  double mean = 0.0;
  for (float v : m) mean += v;
  mean /= static_cast<double>(m.size());
  const float fill = static_cast<float>(mean);

  const int max_width = static_cast<int>(max_width_frac * cols);
  const int count = static_cast<int>(rng.uniform_int(n_masks.first, n_masks.second));
  std::vector<MaskRange> out;
  for (int i = 0; i < count; ++i) {
    const int width = static_cast<int>(rng.uniform_int(0, max_width));
    const int start = static_cast<int>(rng.uniform_int(0, cols - width));
    out.push_back({axis, start, width});
    for (int r = 0; r < rows; ++r)
      for (int c = start; c < start + width; ++c)
        m[static_cast<size_t>(r) * cols + c] = fill;
  }
  return out;
}

inline std::vector<float> transpose(const std::vector<float>& m, int rows, int cols) {
  std::vector<float> t(m.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      t[static_cast<size_t>(c) * rows + r] = m[static_cast<size_t>(r) * cols + c];
  return t;
}

}  // namespace detail

// Conceals 1-2 random vertical bars (time frames) with the matrix mean. The
// label, shape, and all cells outside the bars are untouched.
inline AugmentResult time_mask(const Spectrogram& spec,
                               std::pair<int, int> n_masks = {1, 2},
                               double max_width_frac = 0.1, uint64_t seed = 0) {
  AugmentResult r{spec, {}};
  Rng rng(mix64(seed));
  r.masks = detail::mask_columns(r.spec.values, spec.n_freq, spec.n_frames, n_masks,
                                 max_width_frac, rng, 't');
  return r;
}

// Horizontal bars over frequency bins; otherwise symmetric to time_mask.
inline AugmentResult freq_mask(const Spectrogram& spec,
                               std::pair<int, int> n_masks = {1, 2},
                               double max_width_frac = 0.1, uint64_t seed = 0) {
  AugmentResult r{spec, {}};
  Rng rng(mix64(seed));
  std::vector<float> t = detail::transpose(spec.values, spec.n_freq, spec.n_frames);
  r.masks = detail::mask_columns(t, spec.n_frames, spec.n_freq, n_masks,
                                 max_width_frac, rng, 'f');
  r.spec.values = detail::transpose(t, spec.n_frames, spec.n_freq);
  return r;
}

// Uniform seeded downsampling of every class to the minimum class count,
// order shuffled. Matches the Table-4 arithmetic of the source study.
inline std::vector<LabeledSample> balance_classes(const std::vector<LabeledSample>& samples,
                                                  uint64_t seed) {
  std::array<std::vector<size_t>, kNumClasses> by_class;
  for (size_t i = 0; i < samples.size(); ++i) by_class[samples[i].label].push_back(i);
  size_t min_count = samples.size();
  for (int c = 0; c < kNumClasses; ++c) {
    if (by_class[c].empty())
      throw EmptyClass(str_cat("augment: class ", c, " (", class_name(c),
                               ") has no samples"));
    min_count = std::min(min_count, by_class[c].size());
  }
  Rng rng(mix64(seed));
  std::vector<LabeledSample> out;
  out.reserve(min_count * kNumClasses);
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<size_t> keep = rng.sample_without_replacement(by_class[c].size(), min_count);
    std::sort(keep.begin(), keep.end());
    for (size_t k : keep) out.push_back(samples[by_class[c][k]]);
  }
  rng.shuffle(out);
  return out;
}

struct SplitResult {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
  std::vector<std::string> warnings;
};

// Seeded train/test split; stratified keeps per-class proportions within one
// sample (train takes floor(n_c * train_frac) of each class).
inline SplitResult split(const std::vector<LabeledSample>& samples, double train_frac = 0.8,
                         bool stratified = true, uint64_t seed = 0) {
  if (train_frac < 0.0 || train_frac > 1.0)
    throw ConfigError(str_cat("augment: train_frac ", train_frac, " outside [0, 1]"));
  SplitResult res;
  Rng rng(mix64(seed));

  auto split_group = [&](std::vector<size_t> idx) {
    rng.shuffle(idx);
    const size_t n_train = static_cast<size_t>(idx.size() * train_frac);
    for (size_t i = 0; i < idx.size(); ++i)
      (i < n_train ? res.train : res.test).push_back(samples[idx[i]]);
  };

  if (stratified) {
    std::array<std::vector<size_t>, kNumClasses> by_class;
    for (size_t i = 0; i < samples.size(); ++i) by_class[samples[i].label].push_back(i);
    for (int c = 0; c < kNumClasses; ++c)
      if (!by_class[c].empty()) split_group(std::move(by_class[c]));
  } else {
    std::vector<size_t> idx(samples.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    split_group(std::move(idx));
  }
  if (res.test.empty())
    res.warnings.push_back("split: test set is empty (train_frac too high)");
  return res;
}

// Emits `variants` masked copies of every sample as .spec containers under
// out_dir, alternating time and frequency masks, and returns the combined
// listing (originals + augmented with provenance/parent set).
inline std::vector<LabeledSample> augment_dataset(const std::string& corpus_root,
                                                  const std::vector<LabeledSample>& samples,
                                                  int variants, uint64_t seed,
                                                  const std::string& out_dir,
                                                  std::pair<int, int> n_masks = {1, 2},
                                                  double max_width_frac = 0.1,
                                                  const StftParams& params = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "aug");
  std::vector<LabeledSample> out = samples;
  for (size_t i = 0; i < samples.size(); ++i) {
    Spectrogram spec = load_sample_spectrogram(corpus_root, samples[i], params);
    for (int v = 0; v < variants; ++v) {
      const uint64_t var_seed = derive_seed(seed, i * 97 + static_cast<size_t>(v));
      AugmentResult aug = (v % 2 == 0)
                              ? time_mask(spec, n_masks, max_width_frac, var_seed)
                              : freq_mask(spec, n_masks, max_width_frac, var_seed);
      LabeledSample s = samples[i];
      s.file = (fs::path("aug") / (hex64(var_seed) + ".spec")).string();
      s.window = 0;
      s.provenance = "augmented";
      s.parent = samples[i].id();
      save_spectrogram(aug.spec, (fs::path(out_dir) / s.file).string());
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace honk

#endif  // HONK_AUGMENT_HPP_
