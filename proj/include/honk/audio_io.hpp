// honk/audio_io.hpp
//
// WAV ingest, AudREC sensor-sidecar parsing, and fixed-window segmentation.

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

#ifndef HONK_AUDIO_IO_HPP_
#define HONK_AUDIO_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "honk/common.hpp"

namespace honk {

// Canonical ingest profile: 8 kHz, 16-bit, mono PCM WAV.
inline constexpr int kCanonicalSampleRate = 8000;

// Guard for log of digital silence.
inline constexpr double kSilenceEps = 1e-10;

struct AudioClip {
  std::vector<float> samples;  // mono, in [-1, 1]
  int sample_rate = kCanonicalSampleRate;
  std::string source_id;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct SensorRecord {
  int64_t timestamp_ms = 0;
  double spl_db = 0.0;
  double intensity = 0.0;
  double latitude = 0.0;
  double longitude = 0.0;
};

struct SensorLog {
  std::vector<SensorRecord> records;
  int malformed_count = 0;
  std::vector<int> malformed_lines;  // 1-based line numbers
  std::vector<std::string> warnings;
};

struct SegmentWindow {
  std::string clip_ref;
  int index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  std::span<const float> samples;
  double peak_amplitude = 0.0;
  double rms = 0.0;
  double spl_dbfs = 0.0;  // 20*log10(max(rms, kSilenceEps)), always <= 0
  bool padded = false;
};

// segment() output. Owns the zero-padded tail buffer the last window may
// point into, so windows stay valid views as long as the clip and this
// object are alive.
struct Segmentation {
  std::vector<SegmentWindow> windows;
  std::vector<float> tail_buffer;
};

inline double spl_from_rms(double rms) {
  return 20.0 * std::log10(std::max(rms, kSilenceEps));
}

namespace detail {

inline void window_stats(SegmentWindow& w) {
  double peak = 0.0, sumsq = 0.0;
  for (float v : w.samples) {
    peak = std::max(peak, static_cast<double>(std::fabs(v)));
    sumsq += static_cast<double>(v) * v;
  }
  w.peak_amplitude = peak;
  w.rms = w.samples.empty() ? 0.0 : std::sqrt(sumsq / w.samples.size());
  w.spl_dbfs = spl_from_rms(w.rms);
}

struct RiffChunk {
  char id[4];
  uint32_t size;
};

}  // namespace detail

// Reads a PCM WAV file (8- or 16-bit integer, any rate, any channel count).
// Multichannel input is averaged to mono; 16-bit values are scaled by
// 1/32768, 8-bit unsigned by (v-128)/128.
inline AudioClip load_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("audio_io: cannot open " + path);

  char riff[4], wave[4];
  f.read(riff, 4);
  uint32_t riff_size = read_le<uint32_t>(f);
  (void)riff_size;
  f.read(wave, 4);
  if (!f || std::string_view(riff, 4) != "RIFF" || std::string_view(wave, 4) != "WAVE")
    throw CorruptHeader("audio_io: " + path + " is not a RIFF/WAVE file");

  bool have_fmt = false;
  uint16_t format_tag = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  std::vector<char> data;

  while (f) {
    char id[4];
    f.read(id, 4);
    if (!f) break;
    uint32_t size = read_le<uint32_t>(f);
    if (!f) throw CorruptHeader("audio_io: truncated chunk header in " + path);
    std::string_view chunk(id, 4);
    if (chunk == "fmt ") {
      if (size < 16) throw CorruptHeader("audio_io: fmt chunk too small in " + path);
      format_tag = read_le<uint16_t>(f);
      channels = read_le<uint16_t>(f);
      sample_rate = read_le<uint32_t>(f);
      read_le<uint32_t>(f);  // byte rate
      read_le<uint16_t>(f);  // block align
      bits = read_le<uint16_t>(f);
      f.seekg(size - 16 + (size & 1), std::ios::cur);
      have_fmt = true;
    } else if (chunk == "data") {
      data.resize(size);
      f.read(data.data(), size);
      if (f.gcount() != static_cast<std::streamsize>(size))
        throw CorruptHeader("audio_io: data chunk truncated in " + path);
      if (size & 1) f.seekg(1, std::ios::cur);
    } else {
      f.seekg(size + (size & 1), std::ios::cur);
    }
  }

  if (!have_fmt) throw CorruptHeader("audio_io: missing fmt chunk in " + path);
  if (data.empty()) throw CorruptHeader("audio_io: missing or empty data chunk in " + path);
  if (format_tag != 1)
    throw UnsupportedFormat(str_cat("audio_io: ", path, ": format tag ", format_tag,
                                    " is not integer PCM"));
  if (bits != 8 && bits != 16)
    throw UnsupportedFormat(str_cat("audio_io: ", path, ": ", bits,
                                    "-bit samples unsupported (8/16-bit PCM only)"));
  if (channels == 0) throw CorruptHeader("audio_io: zero channels in " + path);
  if (sample_rate == 0) throw CorruptHeader("audio_io: zero sample rate in " + path);

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t n_frames = data.size() / frame_bytes;

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.source_id = std::filesystem::path(path).filename().string();
  clip.samples.resize(n_frames);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(data.data());
  for (size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const unsigned char* s = p + i * frame_bytes + c * bytes_per_sample;
      if (bits == 16) {
        int16_t v = static_cast<int16_t>(s[0] | (s[1] << 8));
        acc += v / 32768.0;
      } else {
        acc += (static_cast<int>(s[0]) - 128) / 128.0;
      }
    }
    clip.samples[i] = static_cast<float>(std::clamp(acc / channels, -1.0, 1.0));
  }
  return clip;
}

// Writes 16-bit mono PCM.
inline void save_wav(const AudioClip& clip, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("audio_io: cannot write " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
  f.write("RIFF", 4);
  write_le<uint32_t>(f, 36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  write_le<uint32_t>(f, 16);
  write_le<uint16_t>(f, 1);  // PCM
  write_le<uint16_t>(f, 1);  // mono
  write_le<uint32_t>(f, static_cast<uint32_t>(clip.sample_rate));
  write_le<uint32_t>(f, static_cast<uint32_t>(clip.sample_rate * 2));
  write_le<uint16_t>(f, 2);
  write_le<uint16_t>(f, 16);
  f.write("data", 4);
  write_le<uint32_t>(f, data_bytes);
  for (float v : clip.samples) {
    double scaled = std::round(static_cast<double>(v) * 32768.0);
    int16_t q = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    write_le<int16_t>(f, q);
  }
  if (!f) throw DataError("audio_io: short write to " + path);
}

// Parses the AudREC sidecar text format: one `timestamp,spl_db,intensity,lat,lon`
// record per line, optional header line, UTF-8, LF. Malformed lines are counted
// and reported; out-of-range values raise RangeError naming the field.
inline SensorLog parse_sensor_log(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("audio_io: cannot open sensor log " + path);

  auto parse_double = [](std::string_view s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && ptr == e;
  };
  auto parse_i64 = [](std::string_view s, int64_t& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && ptr == e;
  };
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
      s.remove_suffix(1);
    return s;
  };

  SensorLog log;
  std::string line;
  int line_no = 0;
  bool first_content_line = true;
  while (std::getline(f, line)) {
    ++line_no;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;

    std::vector<std::string_view> fields;
    while (true) {
      size_t comma = rest.find(',');
      if (comma == std::string_view::npos) {
        fields.push_back(trim(rest));
        break;
      }
      fields.push_back(trim(rest.substr(0, comma)));
      rest = rest.substr(comma + 1);
    }

    SensorRecord r;
    bool header_candidate = first_content_line;
    first_content_line = false;
    if (fields.size() != 5) {
      if (header_candidate) continue;  // tolerated header of any shape
      ++log.malformed_count;
      log.malformed_lines.push_back(line_no);
      continue;
    }
    if (!parse_i64(fields[0], r.timestamp_ms) || !parse_double(fields[1], r.spl_db) ||
        !parse_double(fields[2], r.intensity) || !parse_double(fields[3], r.latitude) ||
        !parse_double(fields[4], r.longitude)) {
      if (header_candidate) continue;
      ++log.malformed_count;
      log.malformed_lines.push_back(line_no);
      continue;
    }
    if (r.latitude < -90.0 || r.latitude > 90.0)
      throw RangeError(str_cat("audio_io: sensor log ", path, " line ", line_no,
                               ": latitude ", r.latitude, " outside [-90, 90]"));
    if (r.longitude < -180.0 || r.longitude > 180.0)
      throw RangeError(str_cat("audio_io: sensor log ", path, " line ", line_no,
                               ": longitude ", r.longitude, " outside [-180, 180]"));
    if (r.intensity < 0.0)
      throw RangeError(str_cat("audio_io: sensor log ", path, " line ", line_no,
                               ": intensity ", r.intensity, " is negative"));
    log.records.push_back(r);
  }

  if (log.records.empty())
    throw EmptyFile(str_cat("audio_io: sensor log ", path, " contains no records (",
                            log.malformed_count, " malformed lines)"));

  bool monotone = true;
  for (size_t i = 1; i < log.records.size(); ++i)
    if (log.records[i].timestamp_ms <= log.records[i - 1].timestamp_ms) monotone = false;
  if (!monotone) {
    log.warnings.push_back("NonMonotonicTimestamps: records were sorted by timestamp");
    std::stable_sort(log.records.begin(), log.records.end(),
                     [](const SensorRecord& a, const SensorRecord& b) {
                       return a.timestamp_ms < b.timestamp_ms;
                     });
  }
  return log;
}

// Splits a clip into fixed windows (default 1 s, non-overlapping). A trailing
// remainder shorter than half a window is discarded; otherwise it is
// zero-padded to a full window.
inline Segmentation segment(const AudioClip& clip, double window_s = 1.0,
                            double hop_s = 1.0) {
  if (window_s <= 0.0 || hop_s <= 0.0)
    throw DataError("audio_io: segment window_s and hop_s must be positive");
  const size_t n = clip.samples.size();
  const size_t win = static_cast<size_t>(std::llround(window_s * clip.sample_rate));
  const size_t hop = static_cast<size_t>(std::llround(hop_s * clip.sample_rate));
  if (win == 0 || hop == 0)
    throw DataError("audio_io: window shorter than one sample");
  if (n < win)
    throw ClipShorterThanWindow(str_cat("audio_io: clip ", clip.source_id, " (",
                                        clip.duration_s(), " s) is shorter than the ",
                                        window_s, " s window"));

  Segmentation seg;
  const size_t full = (n - win) / hop + 1;
  for (size_t k = 0; k < full; ++k) {
    SegmentWindow w;
    w.clip_ref = clip.source_id;
    w.index = static_cast<int>(k);
    w.start_s = static_cast<double>(k * hop) / clip.sample_rate;
    w.end_s = w.start_s + window_s;
    w.samples = std::span<const float>(clip.samples.data() + k * hop, win);
    detail::window_stats(w);
    seg.windows.push_back(std::move(w));
  }

  const size_t next_start = full * hop;
  if (next_start < n) {
    const size_t rem = n - next_start;
    if (rem * 2 >= win) {  // keep and zero-pad
      seg.tail_buffer.assign(win, 0.0f);
      std::copy(clip.samples.begin() + next_start, clip.samples.end(),
                seg.tail_buffer.begin());
      SegmentWindow w;
      w.clip_ref = clip.source_id;
      w.index = static_cast<int>(full);
      w.start_s = static_cast<double>(next_start) / clip.sample_rate;
      w.end_s = w.start_s + window_s;
      w.samples = std::span<const float>(seg.tail_buffer.data(), win);
      w.padded = true;
      detail::window_stats(w);
      seg.windows.push_back(std::move(w));
    }
  }
  return seg;
}

}  // namespace honk

#endif  // HONK_AUDIO_IO_HPP_
