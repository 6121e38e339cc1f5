/* Copyright 2026 The ShiftConvNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shiftconv/errors.hpp"

namespace shiftconv {

// Extents of a rank-4 tensor in NCHW order.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::size_t plane() const {
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

// Dense row-major NCHW value grid. Value semantics; the autograd layer wraps
// tensors in shared nodes when gradients need tracking.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
      throw ContractError("Tensor: negative extent in shape " + shape.str());
    }
    data_.assign(shape.numel(), fill);
  }

  Tensor(Shape shape, std::vector<T> values) : shape_(shape), data_(std::move(values)) {
    if (data_.size() != shape_.numel()) {
      throw ContractError("Tensor: data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_.str());
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* raw() { return data_.data(); }
  const T* raw() const { return data_.data(); }

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  T& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  const T& at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Pointer to the start of one (n, c) plane.
  T* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const T* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(),
                   [](T v) { return static_cast<U>(v); });
    return Tensor<U>(shape_, std::move(out));
  }

  // Returns samples [first, first + count) along the batch axis.
  Tensor batch_slice(int first, int count) const {
    Shape s = shape_;
    s.n = count;
    const std::size_t per = static_cast<std::size_t>(shape_.c) * shape_.plane();
    std::vector<T> out(data_.begin() + first * per, data_.begin() + (first + count) * per);
    return Tensor(s, std::move(out));
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_{};
  std::vector<T> data_;
};

// Stacks tensors along the batch axis; all must share (C, H, W).
template <typename T>
Tensor<T> stack_batch(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw ContractError("stack_batch: no inputs");
  Shape s = parts.front().shape();
  s.n = 0;
  std::vector<T> data;
  for (const auto& p : parts) {
    if (p.shape().c != s.c || p.shape().h != s.h || p.shape().w != s.w) {
      throw ContractError("stack_batch: shape " + p.shape().str() + " differs from " +
                          parts.front().shape().str());
    }
    s.n += p.shape().n;
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  return Tensor<T>(s, std::move(data));
}

// Per-pixel horizontal displacement in pixels, left-image reference frame.
// Stored as a single-channel grid.
class DisparityMap {
 public:
  DisparityMap() = default;
  DisparityMap(int height, int width, float fill = 0.0f)
      : height_(height), width_(width),
        values_(static_cast<std::size_t>(height) * width, fill) {}
  DisparityMap(int height, int width, std::vector<float> values)
      : height_(height), width_(width), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(height) * width) {
      throw ContractError("DisparityMap: value count does not match " + std::to_string(height) +
                          "x" + std::to_string(width));
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }
  float& at(int y, int x) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  float at(int y, int x) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

  template <typename T>
  Tensor<T> to_tensor() const {
    std::vector<T> v(values_.begin(), values_.end());
    return Tensor<T>(Shape{1, 1, height_, width_}, std::move(v));
  }

  // Takes sample `n`, channel 0 of a (N,1,H,W) tensor.
  template <typename T>
  static DisparityMap from_tensor(const Tensor<T>& t, int n = 0) {
    if (t.shape().c != 1) {
      throw ContractError("DisparityMap::from_tensor: expected 1 channel, got shape " +
                          t.shape().str());
    }
    DisparityMap m(t.shape().h, t.shape().w);
    const T* p = t.plane(n, 0);
    for (std::size_t i = 0; i < m.values_.size(); ++i) m.values_[i] = static_cast<float>(p[i]);
    return m;
  }

  bool operator==(const DisparityMap&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> values_;
};

}  // namespace shiftconv
