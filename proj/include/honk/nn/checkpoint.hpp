// honk/nn/checkpoint.hpp
//
// Versioned binary weight container with a shape manifest. Loading verifies
// name and shape agreement before touching any tensor.

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

#ifndef HONK_NN_CHECKPOINT_HPP_
#define HONK_NN_CHECKPOINT_HPP_

#include <fstream>
#include <string>
#include <vector>

#include "honk/common.hpp"
#include "honk/nn/layers.hpp"

namespace honk::nn {

inline constexpr char kCkptMagic[9] = "HNKCKPT1";

inline void save_checkpoint(const std::string& path, Layer& model) {
  std::vector<NamedParam> params;
  model.collect("model", params);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot write " + path);
  f.write(kCkptMagic, 8);
  write_le<uint32_t>(f, 1);
  write_le<uint32_t>(f, static_cast<uint32_t>(params.size()));
  for (const NamedParam& p : params) {
    write_le<uint32_t>(f, static_cast<uint32_t>(p.name.size()));
    f.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_le<uint32_t>(f, static_cast<uint32_t>(p.value->shape.size()));
    for (int d : p.value->shape) write_le<int32_t>(f, d);
    for (float v : p.value->data) write_le<float>(f, v);
  }
  if (!f) throw DataError("checkpoint: short write to " + path);
}

inline void load_checkpoint(const std::string& path, Layer& model) {
  std::vector<NamedParam> params;
  model.collect("model", params);
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string_view(magic, 8) != std::string_view(kCkptMagic, 8))
    throw CorruptHeader("checkpoint: bad magic in " + path);
  const uint32_t version = read_le<uint32_t>(f);
  if (version != 1)
    throw UnsupportedFormat(str_cat("checkpoint: unknown version ", version, " in ", path));
  const uint32_t count = read_le<uint32_t>(f);
  if (count != params.size())
    throw WeightManifestMismatch(str_cat("checkpoint: ", path, " holds ", count,
                                         " tensors, model expects ", params.size()));
  for (NamedParam& p : params) {
    const uint32_t name_len = read_le<uint32_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    if (name != p.name)
      throw WeightManifestMismatch(str_cat("checkpoint: tensor '", name,
                                           "' where model expects '", p.name, "'"));
    const uint32_t ndim = read_le<uint32_t>(f);
    std::vector<int> shape(ndim);
    for (uint32_t i = 0; i < ndim; ++i) shape[i] = read_le<int32_t>(f);
    if (shape != p.value->shape)
      throw WeightManifestMismatch(str_cat("checkpoint: tensor '", name, "' shape ",
                                           Tensor::shape_str(shape), " vs model ",
                                           p.value->shape_str()));
    for (float& v : p.value->data) v = read_le<float>(f);
  }
  if (!f) throw CorruptHeader("checkpoint: truncated data in " + path);
}

// Copies parameters between two models with identical manifests (same layer
// graph); used to seed GAN generators from trained decoders.
inline void copy_weights(Layer& src, Layer& dst) {
  std::vector<NamedParam> a, b;
  src.collect("model", a);
  dst.collect("model", b);
  if (a.size() != b.size())
    throw WeightManifestMismatch("copy_weights: models expose different tensor counts");
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].value->shape != b[i].value->shape)
      throw WeightManifestMismatch(str_cat("copy_weights: tensor ", a[i].name, " ",
                                           a[i].value->shape_str(), " vs ", b[i].name,
                                           " ", b[i].value->shape_str()));
    b[i].value->data = a[i].value->data;
  }
}

// Stable fingerprint of all parameter bytes; used in test assertions about
// which parameters a training step touched.
inline uint64_t parameter_hash(Layer& model, bool trainable_only = false) {
  std::vector<NamedParam> params;
  model.collect("model", params);
  uint64_t h = 0xcbf29ce484222325ull;
  for (const NamedParam& p : params) {
    if (trainable_only && (!p.grad || !p.trainable)) continue;
    h = fnv1a64(p.name, h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(p.value->data.data()),
                                 p.value->data.size() * sizeof(float)),
                h);
  }
  return h;
}

}  // namespace honk::nn

#endif  // HONK_NN_CHECKPOINT_HPP_
