// honk/nn/tensor.hpp

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

#ifndef HONK_NN_TENSOR_HPP_
#define HONK_NN_TENSOR_HPP_

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "honk/common.hpp"

namespace honk::nn {

// Dense float32 tensor, row-major. Batched activations are [N, C, H, W] or
// [N, D]; weights use whatever layout their layer documents.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel_of(shape)), 0.0f);
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }

  Tensor reshaped(std::vector<int> s) const {
    if (numel_of(s) != numel())
      throw ShapeMismatch(str_cat("nn: cannot reshape ", numel(), " elements to ",
                                  shape_str(s)));
    Tensor t;
    t.shape = std::move(s);
    t.data = data;
    return t;
  }

  void fill(float v) { std::fill(data.begin(), data.end(), v); }

  static std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i)
      out += (i ? "x" : "") + std::to_string(s[i]);
    return out + "]";
  }
  std::string shape_str() const { return shape_str(shape); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

}  // namespace honk::nn

#endif  // HONK_NN_TENSOR_HPP_
