// honk/dataset.hpp
//
// LabeledSample records, the labels.jsonl interchange format, and corpus
// loading (WAV or spectrogram-container files) into in-memory spectrograms.

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

#ifndef HONK_DATASET_HPP_
#define HONK_DATASET_HPP_

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "honk/audio_io.hpp"
#include "honk/common.hpp"
#include "honk/spectrogram.hpp"

namespace honk {

struct LabeledSample {
  std::string file;  // path relative to the corpus root (.wav or .spec)
  int window = 0;
  int label = 0;
  double confidence = 1.0;
  std::string provenance = "manual";  // manual | mae | maegan | augmented
  std::string parent;                 // originating sample id, augmented only

  std::string id() const { return file + "#" + std::to_string(window); }
};

// Ground-truth corpus listings carry only {file, window, label}; labeler and
// augmentation outputs add the provenance fields.
inline void write_labels_jsonl(const std::string& path,
                               const std::vector<LabeledSample>& samples,
                               bool minimal = false) {
  std::ofstream f(path);
  if (!f) throw DataError("dataset: cannot write " + path);
  for (const LabeledSample& s : samples) {
    nlohmann::json j;
    j["file"] = s.file;
    j["window"] = s.window;
    j["label"] = s.label;
    if (!minimal) {
      j["confidence"] = s.confidence;
      j["provenance"] = s.provenance;
      if (!s.parent.empty()) j["parent"] = s.parent;
    }
    f << j.dump() << "\n";
  }
}

inline std::vector<LabeledSample> read_labels_jsonl(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("dataset: cannot open " + path);
  std::vector<LabeledSample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(str_cat("dataset: ", path, " line ", line_no, ": ", e.what()));
    }
    LabeledSample s;
    s.file = j.at("file").get<std::string>();
    s.window = j.value("window", 0);
    s.label = j.at("label").get<int>();
    s.confidence = j.value("confidence", 1.0);
    s.provenance = j.value("provenance", std::string("manual"));
    s.parent = j.value("parent", std::string());
    if (s.label < 0 || s.label >= kNumClasses)
      throw RangeError(str_cat("dataset: ", path, " line ", line_no, ": label ",
                               s.label, " outside 0..3"));
    out.push_back(std::move(s));
  }
  if (out.empty()) throw EmptyFile("dataset: no samples in " + path);
  return out;
}

// Materializes the spectrogram for one sample. WAV files are segmented with
// the given window length; container files load directly.
inline Spectrogram load_sample_spectrogram(const std::string& corpus_root,
                                           const LabeledSample& s,
                                           const StftParams& params = {},
                                           double window_s = 1.0) {
  const std::filesystem::path path = std::filesystem::path(corpus_root) / s.file;
  if (path.extension() == ".spec") return load_spectrogram(path.string());
  AudioClip clip = load_wav(path.string());
  clip.source_id = s.file;  // keep refs relative to the corpus root
  Segmentation seg = segment(clip, window_s, window_s);
  if (s.window < 0 || s.window >= static_cast<int>(seg.windows.size()))
    throw DataError(str_cat("dataset: ", s.file, " has no window ", s.window));
  return stft_spectrogram(seg.windows[static_cast<size_t>(s.window)], clip.sample_rate,
                          params);
}

struct LoadedCorpus {
  std::vector<LabeledSample> samples;
  std::vector<Spectrogram> spectrograms;  // parallel to samples
};

inline LoadedCorpus load_corpus(const std::string& corpus_root,
                                const std::string& labels_file = "labels.jsonl",
                                const StftParams& params = {}) {
  LoadedCorpus c;
  c.samples = read_labels_jsonl(
      (std::filesystem::path(corpus_root) / labels_file).string());
  c.spectrograms.reserve(c.samples.size());
  for (const LabeledSample& s : c.samples)
    c.spectrograms.push_back(load_sample_spectrogram(corpus_root, s, params));
  return c;
}

}  // namespace honk

#endif  // HONK_DATASET_HPP_
