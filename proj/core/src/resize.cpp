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

#include "shiftconv/resize.hpp"

#include <string>
#include <vector>

namespace shiftconv {

namespace {

std::vector<int> source_indices(int src, int dst) {
  std::vector<int> idx(dst);
  for (int i = 0; i < dst; ++i) {
    // Exact in integer arithmetic: floor((2i + 1) * src / (2 dst)).
    const long long num = (2LL * i + 1) * src;
    idx[i] = static_cast<int>(num / (2LL * dst));
  }
  return idx;
}

}  // namespace

template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& input, int new_h, int new_w, bool is_disparity) {
  if (new_h < 1 || new_w < 1) {
    throw ContractError("resize_nearest: target extents must be positive, got " +
                        std::to_string(new_h) + "x" + std::to_string(new_w));
  }
  const Shape s = input.shape();
  const auto ys = source_indices(s.h, new_h);
  const auto xs = source_indices(s.w, new_w);
  Tensor<T> out(Shape{s.n, s.c, new_h, new_w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* src = input.plane(n, c);
      T* dst = out.plane(n, c);
      for (int y = 0; y < new_h; ++y) {
        const T* row = src + static_cast<std::size_t>(ys[y]) * s.w;
        for (int x = 0; x < new_w; ++x) {
          const T v = row[xs[x]];
          dst[static_cast<std::size_t>(y) * new_w + x] =
              is_disparity ? static_cast<T>(static_cast<double>(v) * new_w / s.w) : v;
        }
      }
    }
  }
  return out;
}

DisparityMap resize_nearest(const DisparityMap& input, int new_h, int new_w) {
  return DisparityMap::from_tensor(resize_nearest(input.to_tensor<float>(), new_h, new_w, true));
}

template Tensor<float> resize_nearest(const Tensor<float>&, int, int, bool);
template Tensor<double> resize_nearest(const Tensor<double>&, int, int, bool);

}  // namespace shiftconv
