// honk/spectrogram.hpp
//
// Short-time Fourier log-magnitude spectrograms: the universal sample
// representation for labeling, augmentation, and classification.

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

#ifndef HONK_SPECTROGRAM_HPP_
#define HONK_SPECTROGRAM_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "honk/audio_io.hpp"
#include "honk/common.hpp"

namespace honk {

enum class Taper { kHann, kRect };

struct StftParams {
  int fft_size = 256;
  int hop = 128;
  Taper taper = Taper::kHann;
  double floor_db = -80.0;
};

// Value copy of the stats of the window a spectrogram came from. Kept by
// value (no view) so spectrograms outlive their source clip.
struct WindowMeta {
  std::string clip_ref;
  int index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double peak_amplitude = 0.0;
  double rms = 0.0;
  double spl_dbfs = 0.0;
};

inline WindowMeta meta_of(const SegmentWindow& w) {
  return WindowMeta{w.clip_ref, w.index, w.start_s, w.end_s,
                    w.peak_amplitude, w.rms, w.spl_dbfs};
}

// Log-magnitude time-frequency matrix. Rows are frequency bins (row 0 = DC),
// columns are time frames. Values are dB relative to the matrix max, clipped
// to [floor_db, 0].
struct Spectrogram {
  int n_freq = 0;
  int n_frames = 0;
  std::vector<float> values;  // row-major [n_freq][n_frames]
  double freq_resolution = 0.0;  // Hz per bin
  double time_resolution = 0.0;  // seconds per frame
  double floor_db = -80.0;
  std::optional<WindowMeta> window_meta;

  float& at(int f, int t) { return values[static_cast<size_t>(f) * n_frames + t]; }
  float at(int f, int t) const { return values[static_cast<size_t>(f) * n_frames + t]; }
};

// Linear magnitudes before dB conversion; exposed so energy bookkeeping
// (Parseval-style checks) and frequency statistics can run on the raw STFT.
struct MagnitudeMatrix {
  int n_freq = 0;
  int n_frames = 0;
  std::vector<double> m;  // row-major [n_freq][n_frames]

  double at(int f, int t) const { return m[static_cast<size_t>(f) * n_frames + t]; }
};

inline std::vector<double> make_taper(Taper taper, int n) {
  std::vector<double> w(n, 1.0);
  if (taper == Taper::kHann) {
    for (int i = 0; i < n; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (n - 1));
  }
  return w;
}

namespace detail {

// Iterative radix-2 FFT (in place). Falls back to the direct DFT for
// non-power-of-two sizes.
inline void fft(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  if (n == 0) return;
  if ((n & (n - 1)) != 0) {
    std::vector<std::complex<double>> out(n);
    for (size_t k = 0; k < n; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (size_t t = 0; t < n; ++t) {
        double ang = -2.0 * M_PI * static_cast<double>(k * t % n) / n;
        acc += a[t] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      out[k] = acc;
    }
    a = std::move(out);
    return;
  }
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * M_PI / static_cast<double>(len);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

}  // namespace detail

// One-sided STFT magnitudes of a signal. Frames advance by `hop` samples and
// a frame is emitted only when fully covered, so a window of W samples yields
// floor((W - fft_size)/hop) + 1 frames.
inline MagnitudeMatrix stft_magnitudes(std::span<const float> samples,
                                       const StftParams& p = {}) {
  if (p.fft_size <= 1 || p.hop <= 0)
    throw DataError("spectrogram: fft_size/hop must be positive");
  if (samples.size() < static_cast<size_t>(p.fft_size))
    throw WindowTooShort(str_cat("spectrogram: window of ", samples.size(),
                                 " samples is shorter than fft_size ", p.fft_size));
  const std::vector<double> taper = make_taper(p.taper, p.fft_size);
  MagnitudeMatrix mag;
  mag.n_freq = p.fft_size / 2 + 1;
  mag.n_frames =
      static_cast<int>((samples.size() - p.fft_size) / p.hop) + 1;
  mag.m.assign(static_cast<size_t>(mag.n_freq) * mag.n_frames, 0.0);

  std::vector<std::complex<double>> frame(p.fft_size);
  for (int t = 0; t < mag.n_frames; ++t) {
    const float* base = samples.data() + static_cast<size_t>(t) * p.hop;
    for (int i = 0; i < p.fft_size; ++i)
      frame[i] = std::complex<double>(base[i] * taper[i], 0.0);
    detail::fft(frame);
    for (int f = 0; f < mag.n_freq; ++f)
      mag.m[static_cast<size_t>(f) * mag.n_frames + t] = std::abs(frame[f]);
  }
  return mag;
}

inline Spectrogram magnitudes_to_db(const MagnitudeMatrix& mag, int sample_rate,
                                    const StftParams& p,
                                    std::optional<WindowMeta> meta) {
  Spectrogram s;
  s.n_freq = mag.n_freq;
  s.n_frames = mag.n_frames;
  s.freq_resolution = static_cast<double>(sample_rate) / p.fft_size;
  s.time_resolution = static_cast<double>(p.hop) / sample_rate;
  s.floor_db = p.floor_db;
  s.window_meta = std::move(meta);
  s.values.resize(mag.m.size());

  double ref = 0.0;
  for (double v : mag.m) ref = std::max(ref, v);
  if (ref <= kSilenceEps) {
    std::fill(s.values.begin(), s.values.end(), static_cast<float>(p.floor_db));
    return s;
  }
  for (size_t i = 0; i < mag.m.size(); ++i) {
    double db = 20.0 * std::log10(std::max(mag.m[i], kSilenceEps) / ref);
    s.values[i] = static_cast<float>(std::clamp(db, p.floor_db, 0.0));
  }
  return s;
}

inline Spectrogram stft_spectrogram(const SegmentWindow& window, int sample_rate,
                                    const StftParams& p = {}) {
  return magnitudes_to_db(stft_magnitudes(window.samples, p), sample_rate, p,
                          meta_of(window));
}

inline Spectrogram stft_spectrogram(std::span<const float> samples, int sample_rate,
                                    const StftParams& p = {},
                                    std::optional<WindowMeta> meta = std::nullopt) {
  return magnitudes_to_db(stft_magnitudes(samples, p), sample_rate, p, std::move(meta));
}

// --- image conversion ---

// Grayscale values replicated over 3 channels, HWC layout.
struct Image {
  int h = 0, w = 0, c = 0;
  std::vector<float> data;

  float& at(int y, int x, int ch) {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  float at(int y, int x, int ch) const {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
};

// Bilinear resample with half-pixel-centered sampling, clamped at the edges.
inline std::vector<float> resize_bilinear(const float* src, int sh, int sw,
                                          int oh, int ow) {
  std::vector<float> out(static_cast<size_t>(oh) * ow);
  const double sy = static_cast<double>(sh) / oh;
  const double sx = static_cast<double>(sw) / ow;
  for (int y = 0; y < oh; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(sh - 1));
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, sh - 1);
    double wy = fy - y0;
    for (int x = 0; x < ow; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(sw - 1));
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, sw - 1);
      double wx = fx - x0;
      double top = (1.0 - wx) * src[static_cast<size_t>(y0) * sw + x0] +
                   wx * src[static_cast<size_t>(y0) * sw + x1];
      double bot = (1.0 - wx) * src[static_cast<size_t>(y1) * sw + x0] +
                   wx * src[static_cast<size_t>(y1) * sw + x1];
      out[static_cast<size_t>(y) * ow + x] =
          static_cast<float>((1.0 - wy) * top + wy * bot);
    }
  }
  return out;
}

// Min-max normalized [0,1] matrix resized to oh x ow, frequency axis flipped
// so low frequencies sit at the bottom of the picture. A constant input maps
// to all 0.5. Single-channel variant used by the autoencoder branches.
inline std::vector<float> to_matrix(const Spectrogram& spec, int oh, int ow) {
  float lo = spec.values[0], hi = spec.values[0];
  for (float v : spec.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<float> norm(spec.values.size());
  if (hi - lo < 1e-12f) {
    std::fill(norm.begin(), norm.end(), 0.5f);
  } else {
    for (size_t i = 0; i < spec.values.size(); ++i)
      norm[i] = (spec.values[i] - lo) / (hi - lo);
  }
  // flip rows: row 0 of the picture is the highest frequency
  std::vector<float> flipped(norm.size());
  for (int f = 0; f < spec.n_freq; ++f)
    std::copy(norm.begin() + static_cast<size_t>(f) * spec.n_frames,
              norm.begin() + static_cast<size_t>(f + 1) * spec.n_frames,
              flipped.begin() + static_cast<size_t>(spec.n_freq - 1 - f) * spec.n_frames);
  return resize_bilinear(flipped.data(), spec.n_freq, spec.n_frames, oh, ow);
}

inline Image to_image(const Spectrogram& spec, int out_h = 224, int out_w = 224) {
  std::vector<float> gray = to_matrix(spec, out_h, out_w);
  Image img;
  img.h = out_h;
  img.w = out_w;
  img.c = 3;
  img.data.resize(gray.size() * 3);
  for (size_t i = 0; i < gray.size(); ++i)
    img.data[i * 3] = img.data[i * 3 + 1] = img.data[i * 3 + 2] = gray[i];
  return img;
}

// --- binary tensor container ---
//
// Layout (little-endian): magic "HNKSPEC1", u32 version, u32 n_freq,
// u32 n_frames, f64 freq_res, f64 time_res, f64 floor_db, u8 has_meta,
// optional meta block, then n_freq*n_frames float32 values.

inline constexpr char kSpecMagic[9] = "HNKSPEC1";

inline void save_spectrogram(const Spectrogram& s, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("spectrogram: cannot write " + path);
  f.write(kSpecMagic, 8);
  write_le<uint32_t>(f, 1);
  write_le<uint32_t>(f, static_cast<uint32_t>(s.n_freq));
  write_le<uint32_t>(f, static_cast<uint32_t>(s.n_frames));
  write_le<double>(f, s.freq_resolution);
  write_le<double>(f, s.time_resolution);
  write_le<double>(f, s.floor_db);
  write_le<uint8_t>(f, s.window_meta ? 1 : 0);
  if (s.window_meta) {
    const WindowMeta& m = *s.window_meta;
    write_le<uint32_t>(f, static_cast<uint32_t>(m.clip_ref.size()));
    f.write(m.clip_ref.data(), static_cast<std::streamsize>(m.clip_ref.size()));
    write_le<int32_t>(f, m.index);
    write_le<double>(f, m.start_s);
    write_le<double>(f, m.end_s);
    write_le<double>(f, m.peak_amplitude);
    write_le<double>(f, m.rms);
    write_le<double>(f, m.spl_dbfs);
  }
  for (float v : s.values) write_le<float>(f, v);
  if (!f) throw DataError("spectrogram: short write to " + path);
}

inline Spectrogram load_spectrogram(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("spectrogram: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string_view(magic, 8) != std::string_view(kSpecMagic, 8))
    throw CorruptHeader("spectrogram: bad magic in " + path);
  uint32_t version = read_le<uint32_t>(f);
  if (version != 1)
    throw UnsupportedFormat(str_cat("spectrogram: unknown container version ",
                                    version, " in ", path));
  Spectrogram s;
  s.n_freq = static_cast<int>(read_le<uint32_t>(f));
  s.n_frames = static_cast<int>(read_le<uint32_t>(f));
  s.freq_resolution = read_le<double>(f);
  s.time_resolution = read_le<double>(f);
  s.floor_db = read_le<double>(f);
  uint8_t has_meta = read_le<uint8_t>(f);
  if (has_meta) {
    WindowMeta m;
    uint32_t len = read_le<uint32_t>(f);
    m.clip_ref.resize(len);
    f.read(m.clip_ref.data(), len);
    m.index = read_le<int32_t>(f);
    m.start_s = read_le<double>(f);
    m.end_s = read_le<double>(f);
    m.peak_amplitude = read_le<double>(f);
    m.rms = read_le<double>(f);
    m.spl_dbfs = read_le<double>(f);
    s.window_meta = std::move(m);
  }
  if (s.n_freq <= 0 || s.n_frames <= 0 ||
      static_cast<uint64_t>(s.n_freq) * s.n_frames > (1ull << 28))
    throw CorruptHeader("spectrogram: implausible dimensions in " + path);
  s.values.resize(static_cast<size_t>(s.n_freq) * s.n_frames);
  for (float& v : s.values) v = read_le<float>(f);
  if (!f) throw CorruptHeader("spectrogram: truncated data in " + path);
  return s;
}

}  // namespace honk

#endif  // HONK_SPECTROGRAM_HPP_
