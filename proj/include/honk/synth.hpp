// honk/synth.hpp
//
// Labeled synthetic traffic audio: harmonic-stack honks for the three vehicle
// classes, ambient-noise textures, scene mixing with per-window ground truth,
// and corpus generation. Substitutes for field recordings at desk scale.

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

#ifndef HONK_SYNTH_HPP_
#define HONK_SYNTH_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "honk/audio_io.hpp"
#include "honk/common.hpp"
#include "honk/dataset.hpp"
#include "honk/rng.hpp"

namespace honk {

struct HonkModel {
  int vclass = kLwv;
  double f0_lo = 1200.0, f0_hi = 3000.0;  // fundamental range, Hz
  int n_harmonics = 1;
  double harmonic_decay = 4.0;  // amplitude of harmonic k scales as k^-decay
  double dur_lo = 0.2, dur_hi = 3.0;
  double amp_lo = 0.25, amp_hi = 0.9;
  double am_rate_hz = 6.0;  // tremolo, 0 disables
  double am_depth = 0.25;
};

// Default per-class horn models. Frequency bands echo real horn acoustics:
// two-wheeler horns are high-pitched, truck/bus air horns low with rich
// harmonics. These are configuration, not constants.
inline HonkModel default_honk_model(int vclass) {
  HonkModel m;
  m.vclass = vclass;
  switch (vclass) {
    case kLwv:
      m.f0_lo = 1200.0; m.f0_hi = 3000.0;
      m.n_harmonics = 2; m.harmonic_decay = 4.0;
      m.am_rate_hz = 8.0; m.am_depth = 0.3;
      break;
    case kMwv:
      m.f0_lo = 600.0; m.f0_hi = 1100.0;
      m.n_harmonics = 2; m.harmonic_decay = 4.0;
      m.am_rate_hz = 5.0; m.am_depth = 0.2;
      break;
    case kHwv:
      m.f0_lo = 150.0; m.f0_hi = 500.0;
      m.n_harmonics = 5; m.harmonic_decay = 4.0;
      m.am_rate_hz = 3.0; m.am_depth = 0.15;
      break;
    default:
      throw DataError(str_cat("synth: no honk model for class ", vclass));
  }
  return m;
}

struct RealizedHonk {
  int vclass = 0;
  double f0 = 0.0;
  double duration_s = 0.0;
  double amplitude = 0.0;
};

namespace detail {

// Bates(3): mean of three uniforms, concentrated toward the band center.
inline double sample_band(Rng& rng, double lo, double hi) {
  double z = (rng.uniform() + rng.uniform() + rng.uniform()) / 3.0;
  return lo + z * (hi - lo);
}

inline void render_honk(std::vector<float>& out, size_t offset, const HonkModel& m,
                        const RealizedHonk& r, Rng& rng, int sample_rate) {
  const size_t n = static_cast<size_t>(std::llround(r.duration_s * sample_rate));
  const double nyquist = sample_rate / 2.0;
  std::vector<double> amps, phases, freqs;
  for (int k = 1; k <= m.n_harmonics; ++k) {
    double f = r.f0 * k;
    if (f >= 0.98 * nyquist) break;  // drop aliasing harmonics
    freqs.push_back(f);
    amps.push_back(std::pow(static_cast<double>(k), -m.harmonic_decay));
    phases.push_back(rng.uniform(0.0, 2.0 * M_PI));
  }
  double norm = 0.0;
  for (double a : amps) norm += a;
  if (norm <= 0.0) return;
  const double am_phase = rng.uniform(0.0, 2.0 * M_PI);
  const double ramp_s = 0.010;  // 10 ms attack/release
  const size_t ramp_n = std::max<size_t>(1, static_cast<size_t>(ramp_s * sample_rate));

  for (size_t i = 0; i < n && offset + i < out.size(); ++i) {
    double t = static_cast<double>(i) / sample_rate;
    double v = 0.0;
    for (size_t k = 0; k < freqs.size(); ++k)
      v += amps[k] * std::sin(2.0 * M_PI * freqs[k] * t + phases[k]);
    v /= norm;
    if (m.am_rate_hz > 0.0) {
      double am = 1.0 - m.am_depth * 0.5 +
                  m.am_depth * 0.5 * std::sin(2.0 * M_PI * m.am_rate_hz * t + am_phase);
      v *= am;
    }
    double env = 1.0;
    if (i < ramp_n) env = static_cast<double>(i) / ramp_n;
    if (n - 1 - i < ramp_n) env = std::min(env, static_cast<double>(n - 1 - i) / ramp_n);
    out[offset + i] += static_cast<float>(r.amplitude * env * v);
  }
}

inline double rms_of(const std::vector<float>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s / v.size());
}

// RBJ-cookbook bandpass biquad (constant skirt gain).
struct Biquad {
  double b0, b1, b2, a1, a2;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

  static Biquad bandpass(double fc, double q, int sample_rate) {
    double w0 = 2.0 * M_PI * fc / sample_rate;
    double alpha = std::sin(w0) / (2.0 * q);
    double a0 = 1.0 + alpha;
    Biquad b{};
    b.b0 = q * alpha / a0;
    b.b1 = 0.0;
    b.b2 = -q * alpha / a0;
    b.a1 = -2.0 * std::cos(w0) / a0;
    b.a2 = (1.0 - alpha) / a0;
    return b;
  }

  double step(double x) {
    double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1; x1 = x;
    y2 = y1; y1 = y;
    return y;
  }
};

}  // namespace detail

enum class NoiseProfile { kNone, kWhite, kBabble, kEngine };

inline const char* noise_profile_name(NoiseProfile p) {
  switch (p) {
    case NoiseProfile::kNone: return "none";
    case NoiseProfile::kWhite: return "white";
    case NoiseProfile::kBabble: return "babble";
    case NoiseProfile::kEngine: return "engine";
  }
  return "?";
}

inline NoiseProfile noise_profile_from_name(const std::string& s) {
  if (s == "none") return NoiseProfile::kNone;
  if (s == "white") return NoiseProfile::kWhite;
  if (s == "babble") return NoiseProfile::kBabble;
  if (s == "engine") return NoiseProfile::kEngine;
  throw ConfigError("synth: unknown noise profile '" + s + "'");
}

// Unit-RMS noise texture of n samples.
inline std::vector<float> synth_noise(NoiseProfile profile, size_t n, uint64_t seed,
                                      int sample_rate = kCanonicalSampleRate) {
  std::vector<float> out(n, 0.0f);
  if (profile == NoiseProfile::kNone || n == 0) return out;
  Rng rng(mix64(seed));

  if (profile == NoiseProfile::kWhite) {
    for (size_t i = 0; i < n; ++i) out[i] = static_cast<float>(rng.normal());
  } else if (profile == NoiseProfile::kBabble) {
    // Four speech-band voices: filtered noise with syllabic amplitude motion.
    for (int voice = 0; voice < 4; ++voice) {
      auto bp = detail::Biquad::bandpass(rng.uniform(500.0, 1800.0), 0.5, sample_rate);
      double env = 0.0, env_target = rng.uniform();
      size_t next_syllable = 0;
      for (size_t i = 0; i < n; ++i) {
        if (i >= next_syllable) {
          env_target = rng.uniform() * rng.uniform();  // favor quiet gaps
          next_syllable = i + static_cast<size_t>(rng.uniform(0.08, 0.25) * sample_rate);
        }
        env += (env_target - env) * 0.002;
        out[i] += static_cast<float>(bp.step(rng.normal()) * env);
      }
    }
  } else if (profile == NoiseProfile::kEngine) {
    // Low harmonic rumble with slow pitch drift plus a noise floor.
    double f0 = rng.uniform(70.0, 110.0);
    double drift = 0.0;
    double phase[8] = {};
    for (int k = 0; k < 8; ++k) phase[k] = rng.uniform(0.0, 2.0 * M_PI);
    for (size_t i = 0; i < n; ++i) {
      if (i % 400 == 0) drift = std::clamp(drift + rng.normal(0.0, 0.4), -6.0, 6.0);
      double f = f0 + drift;
      double v = 0.0;
      for (int k = 1; k <= 8; ++k) {
        phase[k - 1] += 2.0 * M_PI * f * k / sample_rate;
        v += std::sin(phase[k - 1]) / k;
      }
      out[i] = static_cast<float>(v + 0.25 * rng.normal());
    }
  }

  double r = detail::rms_of(out);
  if (r > 0.0)
    for (float& v : out) v = static_cast<float>(v / r);
  return out;
}

// Renders one honk as a standalone clip. Deterministic per (model, seed).
inline AudioClip synth_honk(const HonkModel& model, uint64_t seed,
                            int sample_rate = kCanonicalSampleRate,
                            RealizedHonk* realized = nullptr) {
  Rng rng(mix64(seed));
  RealizedHonk r;
  r.vclass = model.vclass;
  r.f0 = detail::sample_band(rng, model.f0_lo, model.f0_hi);
  r.duration_s = rng.uniform(model.dur_lo, model.dur_hi);
  r.amplitude = rng.uniform(model.amp_lo, model.amp_hi);

  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.source_id = str_cat("honk-", class_name(model.vclass), "-", hex64(seed));
  clip.samples.assign(static_cast<size_t>(std::llround(r.duration_s * sample_rate)), 0.0f);
  detail::render_honk(clip.samples, 0, model, r, rng, sample_rate);
  for (float& v : clip.samples) v = std::clamp(v, -1.0f, 1.0f);
  if (realized) *realized = r;
  return clip;
}

struct SceneEvent {
  double onset_s = 0.0;
  int vclass = kLwv;
};

struct SceneScript {
  std::string location = "unspecified";  // residential | marketplace | highway
  std::string slot = "morning";          // morning | afternoon | evening
  double duration_s = 10.0;
  std::vector<SceneEvent> honk_events;
  NoiseProfile noise = NoiseProfile::kNone;
  double snr_db = 20.0;
  // Realized honk durations/amplitudes are drawn from these bands (still
  // within each class model's legal range).
  double honk_dur_lo = 0.4, honk_dur_hi = 1.2;
  double honk_amp_lo = 0.25, honk_amp_hi = 0.9;
};

struct RealizedEvent {
  double onset_s = 0.0;
  double duration_s = 0.0;
  double amplitude = 0.0;
  int vclass = 0;
};

struct SceneResult {
  AudioClip clip;
  std::vector<int> window_labels;  // one per 1-s window, 0 = non-honk
  std::vector<RealizedEvent> events;
  double measured_snr_db = 0.0;  // honk-track RMS over scaled-noise RMS, dB
};

// Ground-truth rule: a window takes the class of an event covering at least
// half of it; among several qualifying events the louder wins, remaining ties
// go to the larger coverage, then the earlier onset. The rule is total, so
// overlap is always resolved.
inline std::vector<int> label_windows(double duration_s,
                                      const std::vector<RealizedEvent>& events,
                                      double window_s = 1.0) {
  const int n_windows = static_cast<int>(std::floor(duration_s / window_s + 1e-9));
  std::vector<int> labels(static_cast<size_t>(std::max(n_windows, 0)), kNonHonk);
  for (int w = 0; w < n_windows; ++w) {
    const double t0 = w * window_s, t1 = t0 + window_s;
    const RealizedEvent* best = nullptr;
    double best_cov = 0.0;
    for (const RealizedEvent& e : events) {
      double cov = std::min(t1, e.onset_s + e.duration_s) - std::max(t0, e.onset_s);
      if (cov < window_s * 0.5) continue;
      if (best == nullptr || e.amplitude > best->amplitude ||
          (e.amplitude == best->amplitude &&
           (cov > best_cov || (cov == best_cov && e.onset_s < best->onset_s)))) {
        best = &e;
        best_cov = cov;
      }
    }
    if (best) labels[w] = best->vclass;
  }
  return labels;
}

inline SceneResult synth_scene(const SceneScript& script, uint64_t seed,
                               int sample_rate = kCanonicalSampleRate,
                               double window_s = 1.0) {
  const size_t n = static_cast<size_t>(std::llround(script.duration_s * sample_rate));
  SceneResult res;
  res.clip.sample_rate = sample_rate;
  res.clip.source_id = str_cat("scene-", script.location, "-", hex64(seed));

  std::vector<float> honk_track(n, 0.0f);
  for (size_t e = 0; e < script.honk_events.size(); ++e) {
    const SceneEvent& ev = script.honk_events[e];
    if (ev.onset_s < 0.0 || ev.onset_s >= script.duration_s)
      throw DataError(str_cat("synth: event onset ", ev.onset_s,
                              " outside scene [0, ", script.duration_s, ")"));
    HonkModel model = default_honk_model(ev.vclass);
    model.dur_lo = std::max(model.dur_lo, script.honk_dur_lo);
    model.dur_hi = std::min(model.dur_hi, script.honk_dur_hi);
    model.amp_lo = std::max(model.amp_lo, script.honk_amp_lo);
    model.amp_hi = std::min(model.amp_hi, script.honk_amp_hi);
    Rng rng(derive_seed(seed, e));
    RealizedEvent r;
    r.vclass = ev.vclass;
    r.onset_s = ev.onset_s;
    RealizedHonk h;
    h.vclass = ev.vclass;
    h.f0 = detail::sample_band(rng, model.f0_lo, model.f0_hi);
    h.duration_s = rng.uniform(model.dur_lo, model.dur_hi);
    h.duration_s = std::min(h.duration_s, script.duration_s - ev.onset_s);
    h.amplitude = rng.uniform(model.amp_lo, std::max(model.amp_lo, model.amp_hi));
    r.duration_s = h.duration_s;
    r.amplitude = h.amplitude;
    detail::render_honk(honk_track,
                        static_cast<size_t>(std::llround(ev.onset_s * sample_rate)),
                        model, h, rng, sample_rate);
    res.events.push_back(r);
  }

  std::vector<float> mix = honk_track;
  const double honk_rms = detail::rms_of(honk_track);
  if (script.noise != NoiseProfile::kNone) {
    std::vector<float> noise = synth_noise(script.noise, n, derive_seed(seed, 0x6e6f6973ull),
                                           sample_rate);
    double gain;
    if (honk_rms > 0.0) {
      gain = honk_rms / std::pow(10.0, script.snr_db / 20.0);
    } else {
      gain = 0.05;  // no honks: fixed ambient level
    }
    for (size_t i = 0; i < n; ++i) mix[i] += static_cast<float>(noise[i] * gain);
    res.measured_snr_db = honk_rms > 0.0
                              ? 20.0 * std::log10(honk_rms / (gain * 1.0))
                              : -std::numeric_limits<double>::infinity();
  } else {
    res.measured_snr_db = std::numeric_limits<double>::infinity();
  }

  float peak = 0.0f;
  for (float v : mix) peak = std::max(peak, std::fabs(v));
  if (peak > 0.999f) {
    // rescale instead of clipping so the honk/noise ratio is preserved
    const float g = 0.999f / peak;
    for (float& v : mix) v *= g;
  }
  res.clip.samples = std::move(mix);
  res.window_labels = label_windows(script.duration_s, res.events, window_s);
  return res;
}

// --- location scene presets (densities tuned to the context-rule defaults) ---

inline SceneScript location_script(const std::string& location, const std::string& slot,
                                   double duration_s, uint64_t seed) {
  SceneScript s;
  s.location = location;
  s.slot = slot;
  s.duration_s = duration_s;
  s.honk_dur_lo = 0.55;
  s.honk_dur_hi = 0.8;
  Rng rng(mix64(seed));
  const int n_windows = static_cast<int>(duration_s);

  auto place = [&](const std::vector<int>& class_counts) {
    // one event per distinct window, onset 0.2 s into the window
    int total = 0;
    for (int c : class_counts) total += c;
    if (total > n_windows)
      throw ConfigError(str_cat("synth: ", total, " events do not fit in ",
                                n_windows, " windows"));
    std::vector<size_t> slots = rng.sample_without_replacement(
        static_cast<size_t>(n_windows), static_cast<size_t>(total));
    std::vector<int> classes;
    for (int c = 0; c < static_cast<int>(class_counts.size()); ++c)
      for (int i = 0; i < class_counts[c]; ++i) classes.push_back(c + 1);
    rng.shuffle(classes);
    for (int i = 0; i < total; ++i)
      s.honk_events.push_back({static_cast<double>(slots[i]) + 0.2, classes[i]});
    std::sort(s.honk_events.begin(), s.honk_events.end(),
              [](const SceneEvent& a, const SceneEvent& b) { return a.onset_s < b.onset_s; });
  };

  const double mins = duration_s / 60.0;
  if (location == "residential") {
    // sparse: well under 1 honk/min, no HWV
    place({std::max(1, static_cast<int>(0.4 * mins)), std::max(0, static_cast<int>(0.2 * mins)), 0});
  } else if (location == "marketplace") {
    // busy: ~3 honks/min, LWV+MWV dominate, HWV negligible
    place({static_cast<int>(1.8 * mins), static_cast<int>(1.2 * mins), 0});
  } else if (location == "highway") {
    // HWV plurality
    place({static_cast<int>(0.6 * mins), static_cast<int>(0.4 * mins),
           static_cast<int>(2.0 * mins)});
  } else {
    throw ConfigError("synth: unknown location '" + location + "'");
  }
  return s;
}

// --- corpus generation ---

struct CorpusSpec {
  std::map<int, int> train_counts;  // label -> clip count
  std::map<int, int> test_counts;
  NoiseProfile noise = NoiseProfile::kNone;
  double snr_db = 20.0;
  uint64_t seed = 1;
  int sample_rate = kCanonicalSampleRate;
  // realized honk duration band inside the 1-s clips; keeps coverage >= 50%
  double honk_dur_lo = 0.55, honk_dur_hi = 0.9;
  // ambient level for non-honk clips (RMS full scale)
  double ambient_lo = 0.02, ambient_hi = 0.1;
};

// Emits corpus/{train,test}/<class>/<hex-id>.wav plus labels.jsonl with the
// ground-truth window labels. Every clip is a one-window scene rendered
// through synth_scene, so the labels obey the coverage rule by construction.
inline std::vector<LabeledSample> synth_corpus(const CorpusSpec& spec,
                                               const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::vector<LabeledSample> all;
  uint64_t file_index = 0;
  for (const auto& [split, counts] :
       std::initializer_list<std::pair<const char*, const std::map<int, int>*>>{
           {"train", &spec.train_counts}, {"test", &spec.test_counts}}) {
    for (const auto& [label, count] : *counts) {
      if (label < 0 || label >= kNumClasses)
        throw ConfigError(str_cat("synth: corpus class ", label, " outside 0..3"));
      const fs::path dir = fs::path(out_dir) / split / std::to_string(label);
      fs::create_directories(dir);
      for (int i = 0; i < count; ++i) {
        const uint64_t clip_seed = derive_seed(spec.seed, file_index++);
        SceneScript script;
        script.duration_s = 1.0;
        script.honk_dur_lo = spec.honk_dur_lo;
        script.honk_dur_hi = spec.honk_dur_hi;
        if (label != kNonHonk) {
          Rng rng(mix64(clip_seed));
          script.honk_events.push_back({rng.uniform(0.0, 1.0 - spec.honk_dur_hi), label});
          script.noise = spec.noise;
          script.snr_db = spec.snr_db;
        } else {
          // ambient-only clip; white floor stands in for "clean" silence
          script.noise = spec.noise == NoiseProfile::kNone ? NoiseProfile::kWhite : spec.noise;
          script.snr_db = 0.0;
        }
        SceneResult scene = synth_scene(script, clip_seed, spec.sample_rate);
        if (label == kNonHonk) {
          Rng rng(mix64(clip_seed ^ 0xa5a5ull));
          const double target = rng.uniform(spec.ambient_lo, spec.ambient_hi);
          double r = 0.0;
          for (float v : scene.clip.samples) r += static_cast<double>(v) * v;
          r = std::sqrt(r / scene.clip.samples.size());
          const double g = r > 0.0 ? target / r : 0.0;
          for (float& v : scene.clip.samples)
            v = static_cast<float>(std::clamp(v * g, -1.0, 1.0));
        }
        if (scene.window_labels.at(0) != label)
          throw DataError(str_cat("synth: corpus clip ground truth ",
                                  scene.window_labels.at(0), " != requested ", label));
        LabeledSample s;
        s.file = (fs::path(split) / std::to_string(label) /
                  (hex64(clip_seed) + ".wav")).string();
        s.window = 0;
        s.label = label;
        save_wav(scene.clip, (fs::path(out_dir) / s.file).string());
        all.push_back(std::move(s));
      }
    }
  }
  write_labels_jsonl((fs::path(out_dir) / "labels.jsonl").string(), all,
                     /*minimal=*/true);
  return all;
}

}  // namespace honk

#endif  // HONK_SYNTH_HPP_
