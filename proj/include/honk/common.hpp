// honk/common.hpp

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

#ifndef HONK_COMMON_HPP_
#define HONK_COMMON_HPP_

#include <cstdint>
#include <cstring>
#include <iosfwd>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace honk {

// Error taxonomy. The CLI maps these onto exit codes: ConfigError -> 2,
// DataError -> 3, TrainingError -> 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// audio_io
struct UnsupportedFormat : DataError { using DataError::DataError; };
struct CorruptHeader : DataError { using DataError::DataError; };
struct RangeError : DataError { using DataError::DataError; };
struct EmptyFile : DataError { using DataError::DataError; };
struct ClipShorterThanWindow : DataError { using DataError::DataError; };

// spectrogram
struct WindowTooShort : DataError { using DataError::DataError; };

// labeling
struct InsufficientSamples : DataError { using DataError::DataError; };
struct ShapeMismatch : DataError { using DataError::DataError; };
struct MissingAmplitudeMetadata : DataError { using DataError::DataError; };
struct ModeCollapseDetected : TrainingError { using TrainingError::TrainingError; };

// augment
struct MaskWiderThanAxis : DataError { using DataError::DataError; };
struct EmptyClass : DataError { using DataError::DataError; };

// models
struct WeightManifestMismatch : DataError { using DataError::DataError; };
struct MemberOutputInvalid : DataError { using DataError::DataError; };
struct DivergedLoss : TrainingError { using TrainingError::TrainingError; };

// context
struct TooFewSamples : DataError { using DataError::DataError; };
struct ZeroVariance : DataError { using DataError::DataError; };

// Vehicle classes. Label semantics are fixed project-wide:
// 0 non-honk, 1 LWV, 2 MWV, 3 HWV.
inline constexpr int kNumClasses = 4;
inline constexpr int kNonHonk = 0;
inline constexpr int kLwv = 1;
inline constexpr int kMwv = 2;
inline constexpr int kHwv = 3;

inline const char* class_name(int label) {
  switch (label) {
    case kNonHonk: return "non-honk";
    case kLwv: return "LWV";
    case kMwv: return "MWV";
    case kHwv: return "HWV";
    default: return "?";
  }
}

// FNV-1a 64-bit. Non-cryptographic; used for config/manifest fingerprints
// and bootstrap-resample hashes.
inline uint64_t fnv1a64(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

// Little-endian binary stream helpers for the file containers.
template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

template <typename... Args>
std::string str_cat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << args);
  return oss.str();
}

}  // namespace honk

#endif  // HONK_COMMON_HPP_
