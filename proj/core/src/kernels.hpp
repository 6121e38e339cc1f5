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

// Internal dense kernels shared by the op implementations.

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace shiftconv::detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

struct ConvGeometry {
  int channels;
  int height;
  int width;
  int kh;
  int kw;
  int stride;
  int pad;
  int out_h;
  int out_w;

  int rows() const { return channels * kh * kw; }
  int cols() const { return out_h * out_w; }
};

// col[(c*kh*kw + i*kw + j), oy*out_w + ox] = img[c, oy*s - p + i, ox*s - p + j]
template <typename T>
void im2col(const T* img, const ConvGeometry& g, T* col) {
  const int cols = g.cols();
  for (int c = 0; c < g.channels; ++c) {
    const T* plane = img + static_cast<std::size_t>(c) * g.height * g.width;
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        T* dst = col + static_cast<std::size_t>((c * g.kh + i) * g.kw + j) * cols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int y = oy * g.stride - g.pad + i;
          T* row = dst + static_cast<std::size_t>(oy) * g.out_w;
          if (y < 0 || y >= g.height) {
            std::fill(row, row + g.out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(y) * g.width;
          if (g.stride == 1) {
            const int x0 = j - g.pad;
            for (int ox = 0; ox < g.out_w; ++ox) {
              const int x = x0 + ox;
              row[ox] = (x >= 0 && x < g.width) ? src[x] : T(0);
            }
          } else {
            for (int ox = 0; ox < g.out_w; ++ox) {
              const int x = ox * g.stride - g.pad + j;
              row[ox] = (x >= 0 && x < g.width) ? src[x] : T(0);
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-adds columns back into the image.
template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* img) {
  const int cols = g.cols();
  for (int c = 0; c < g.channels; ++c) {
    T* plane = img + static_cast<std::size_t>(c) * g.height * g.width;
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        const T* src = col + static_cast<std::size_t>((c * g.kh + i) * g.kw + j) * cols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int y = oy * g.stride - g.pad + i;
          if (y < 0 || y >= g.height) continue;
          T* dst = plane + static_cast<std::size_t>(y) * g.width;
          const T* row = src + static_cast<std::size_t>(oy) * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int x = ox * g.stride - g.pad + j;
            if (x >= 0 && x < g.width) dst[x] += row[ox];
          }
        }
      }
    }
  }
}

int thread_count();

// Runs fn(i) for i in [0, count). Each index is handled by exactly one
// thread, so per-index results never depend on the thread count.
template <typename Fn>
void parallel_for(int count, Fn&& fn) {
  const int threads = std::min(thread_count(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace shiftconv::detail
