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

#include "shiftconv/matching.hpp"

#include <cmath>

#include "shiftconv/ops.hpp"

namespace shiftconv {

std::string to_string(ShiftConvVariant v) {
  return v == ShiftConvVariant::ConvPerScaleThenConcat ? "conv_then_concat" : "concat_then_conv";
}

ShiftConvVariant parse_variant(const std::string& s) {
  if (s == "conv_then_concat") return ShiftConvVariant::ConvPerScaleThenConcat;
  if (s == "concat_then_conv") return ShiftConvVariant::ConcatAllThenConv;
  throw ContractError("unknown shift-conv variant '" + s +
                      "' (expected conv_then_concat or concat_then_conv)");
}

void ShiftConvConfig::validate() const {
  if (maxdisp < 1) throw ContractError("ShiftConvConfig: maxdisp must be >= 1");
  if (clue_filters < 1) throw ContractError("ShiftConvConfig: clue_filters must be >= 1");
}

int ShiftConvConfig::scale_count() const {
  return both_directions ? 2 * maxdisp + 1 : maxdisp + 1;
}

std::vector<int> ShiftConvConfig::scales() const {
  std::vector<int> s;
  s.reserve(scale_count());
  for (int d = 0; d <= maxdisp; ++d) s.push_back(d);
  if (both_directions) {
    for (int d = 1; d <= maxdisp; ++d) s.push_back(-d);
  }
  return s;
}

Shape ShiftConvConfig::weight_shape(int channels) const {
  if (variant == ShiftConvVariant::ConvPerScaleThenConcat) {
    return Shape{clue_filters, 2 * channels, 3, 3};
  }
  return Shape{output_channels(), 2 * channels * scale_count(), 3, 3};
}

Shape ShiftConvConfig::bias_shape() const {
  return Shape{1,
               variant == ShiftConvVariant::ConvPerScaleThenConcat ? clue_filters
                                                                   : output_channels(),
               1, 1};
}

template <typename T>
Var<T> shift_concat(Graph<T>& g, const Var<T>& left, const Var<T>& right, int displacement) {
  if (left->value.shape() != right->value.shape()) {
    throw ContractError("shift_concat: left " + left->value.shape().str() + " and right " +
                        right->value.shape().str() + " differ");
  }
  if (displacement >= 0) {
    return ops::concat_channels(g, {ops::hslice_pad(g, left, displacement), right});
  }
  return ops::concat_channels(g, {ops::hslice_pad(g, right, displacement), left});
}

template <typename T>
Var<T> shift_conv_layer(Graph<T>& g, const Var<T>& left, const Var<T>& right,
                        const ShiftConvConfig& cfg, const Var<T>& weight, const Var<T>& bias) {
  cfg.validate();
  const Shape s = left->value.shape();
  if (s != right->value.shape()) {
    throw ContractError("shift_conv_layer: left " + s.str() + " and right " +
                        right->value.shape().str() + " differ");
  }
  if (cfg.maxdisp >= s.w) {
    throw ContractError("shift_conv_layer: maxdisp " + std::to_string(cfg.maxdisp) +
                        " must be < feature width " + std::to_string(s.w));
  }
  const Shape want_w = cfg.weight_shape(s.c);
  if (weight->value.shape() != want_w) {
    throw ContractError("shift_conv_layer: weight shape " + weight->value.shape().str() +
                        " inconsistent with variant " + to_string(cfg.variant) + ", expected " +
                        want_w.str());
  }
  if (bias && bias->value.shape() != cfg.bias_shape()) {
    throw ContractError("shift_conv_layer: bias shape " + bias->value.shape().str() +
                        " expected " + cfg.bias_shape().str());
  }

  std::vector<Var<T>> pieces;
  pieces.reserve(cfg.scale_count());
  if (cfg.variant == ShiftConvVariant::ConvPerScaleThenConcat) {
    for (int d : cfg.scales()) {
      auto pair = shift_concat(g, left, right, d);
      pieces.push_back(ops::leaky_relu(g, ops::conv2d(g, pair, weight, bias, 1, 1)));
    }
    return ops::concat_channels(g, pieces);
  }
  for (int d : cfg.scales()) pieces.push_back(shift_concat(g, left, right, d));
  auto all = ops::concat_channels(g, pieces);
  return ops::leaky_relu(g, ops::conv2d(g, all, weight, bias, 1, 1));
}

template <typename T>
Var<T> correlation_1d(Graph<T>& g, const Var<T>& left, const Var<T>& right, int maxdisp) {
  const Shape s = left->value.shape();
  if (s != right->value.shape()) {
    throw ContractError("correlation_1d: left " + s.str() + " and right " +
                        right->value.shape().str() + " differ");
  }
  if (maxdisp < 0 || maxdisp >= s.w) {
    throw ContractError("correlation_1d: maxdisp " + std::to_string(maxdisp) +
                        " must be in [0, width " + std::to_string(s.w) + ")");
  }
  const T inv_c = T(1) / static_cast<T>(s.c);
  Tensor<T> out(Shape{s.n, maxdisp + 1, s.h, s.w});
  const Tensor<T>& l = left->value;
  const Tensor<T>& r = right->value;
  for (int n = 0; n < s.n; ++n) {
    for (int d = 0; d <= maxdisp; ++d) {
      T* o = out.plane(n, d);
      for (int c = 0; c < s.c; ++c) {
        const T* lp = l.plane(n, c);
        const T* rp = r.plane(n, c);
        for (int y = 0; y < s.h; ++y) {
          const std::size_t row = static_cast<std::size_t>(y) * s.w;
          for (int x = d; x < s.w; ++x) o[row + x] += lp[row + x] * rp[row + x - d];
        }
      }
      for (std::size_t i = 0; i < s.plane(); ++i) o[i] *= inv_c;
    }
  }
  return g.emit("correlation_1d", {left, right}, std::move(out),
                [left, right, maxdisp, s, inv_c](const Tensor<T>& gout) {
                  const Tensor<T>& l = left->value;
                  const Tensor<T>& r = right->value;
                  Tensor<T>* gl = left->requires_grad ? &left->grad_buffer() : nullptr;
                  Tensor<T>* gr = right->requires_grad ? &right->grad_buffer() : nullptr;
                  for (int n = 0; n < s.n; ++n) {
                    for (int d = 0; d <= maxdisp; ++d) {
                      const T* go = gout.plane(n, d);
                      for (int c = 0; c < s.c; ++c) {
                        const T* lp = l.plane(n, c);
                        const T* rp = r.plane(n, c);
                        T* glp = gl ? gl->plane(n, c) : nullptr;
                        T* grp = gr ? gr->plane(n, c) : nullptr;
                        for (int y = 0; y < s.h; ++y) {
                          const std::size_t row = static_cast<std::size_t>(y) * s.w;
                          for (int x = d; x < s.w; ++x) {
                            const T gv = go[row + x] * inv_c;
                            if (glp) glp[row + x] += gv * rp[row + x - d];
                            if (grp) grp[row + x - d] += gv * lp[row + x];
                          }
                        }
                      }
                    }
                  }
                });
}

template <typename T>
Var<T> warp_horizontal(Graph<T>& g, const Var<T>& source, const Tensor<T>& disparity) {
  const Shape s = source->value.shape();
  const Shape ds = disparity.shape();
  if (ds.c != 1 || ds.h != s.h || ds.w != s.w || (ds.n != 1 && ds.n != s.n)) {
    throw ContractError("warp_horizontal: disparity shape " + ds.str() +
                        " does not match source " + s.str());
  }
  // Gather index per (n, y, x); -1 marks an out-of-range source column.
  std::vector<int> gather(static_cast<std::size_t>(s.n) * s.plane());
  for (int n = 0; n < s.n; ++n) {
    const T* dp = disparity.plane(ds.n == 1 ? 0 : n, 0);
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * s.w + x;
        const long sx = static_cast<long>(x) - std::lround(static_cast<double>(dp[i]));
        gather[n * s.plane() + i] = (sx >= 0 && sx < s.w) ? static_cast<int>(sx) : -1;
      }
    }
  }
  Tensor<T> out(s);
  for (int n = 0; n < s.n; ++n) {
    const int* gi = gather.data() + n * s.plane();
    for (int c = 0; c < s.c; ++c) {
      const T* src = source->value.plane(n, c);
      T* dst = out.plane(n, c);
      for (int y = 0; y < s.h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * s.w;
        for (int x = 0; x < s.w; ++x) {
          const int sx = gi[row + x];
          if (sx >= 0) dst[row + x] = src[row + sx];
        }
      }
    }
  }
  return g.emit("warp_horizontal", {source}, std::move(out),
                [source, s, gather = std::move(gather)](const Tensor<T>& gout) {
                  auto& gs = source->grad_buffer();
                  for (int n = 0; n < s.n; ++n) {
                    const int* gi = gather.data() + n * s.plane();
                    for (int c = 0; c < s.c; ++c) {
                      T* dst = gs.plane(n, c);
                      const T* src = gout.plane(n, c);
                      for (int y = 0; y < s.h; ++y) {
                        const std::size_t row = static_cast<std::size_t>(y) * s.w;
                        for (int x = 0; x < s.w; ++x) {
                          const int sx = gi[row + x];
                          if (sx >= 0) dst[row + sx] += src[row + x];
                        }
                      }
                    }
                  }
                });
}

template <typename T>
Var<T> warp_horizontal(Graph<T>& g, const Var<T>& source, const DisparityMap& disparity) {
  return warp_horizontal(g, source, disparity.to_tensor<T>());
}

template <typename T>
Var<T> auto_shift_conv(Graph<T>& g, const Var<T>& left_img, const Var<T>& right_img,
                       const Tensor<T>& base_disp, const Var<T>& weight, const Var<T>& bias,
                       int delta_range) {
  const Shape s = left_img->value.shape();
  if (s != right_img->value.shape()) {
    throw ContractError("auto_shift_conv: left " + s.str() + " and right " +
                        right_img->value.shape().str() + " differ");
  }
  const Shape ds = base_disp.shape();
  if (ds.h != s.h || ds.w != s.w) {
    throw ContractError("auto_shift_conv: base disparity " + ds.str() +
                        " does not match image resolution " + s.str());
  }
  if (weight->value.shape().c != 2 * s.c) {
    throw ContractError("auto_shift_conv: weight " + weight->value.shape().str() +
                        " must take " + std::to_string(2 * s.c) +
                        " input channels (warped right + left image)");
  }
  if (delta_range < 0) throw ContractError("auto_shift_conv: delta_range must be >= 0");

  std::vector<Var<T>> branches;
  for (int delta = -delta_range; delta <= delta_range; ++delta) {
    Tensor<T> shifted = base_disp;
    for (auto& v : shifted.data()) v += static_cast<T>(delta);
    auto warped = warp_horizontal(g, right_img, shifted);
    auto pair = ops::concat_channels(g, {warped, left_img});
    branches.push_back(ops::leaky_relu(g, ops::conv2d(g, pair, weight, bias, 1, 1)));
  }
  Var<T> total = branches.front();
  for (std::size_t i = 1; i < branches.size(); ++i) total = ops::add(g, total, branches[i]);
  return total;
}

#define SHIFTCONV_INSTANTIATE_MATCHING(T)                                                     \
  template Var<T> shift_concat(Graph<T>&, const Var<T>&, const Var<T>&, int);                 \
  template Var<T> shift_conv_layer(Graph<T>&, const Var<T>&, const Var<T>&,                   \
                                   const ShiftConvConfig&, const Var<T>&, const Var<T>&);     \
  template Var<T> correlation_1d(Graph<T>&, const Var<T>&, const Var<T>&, int);               \
  template Var<T> warp_horizontal(Graph<T>&, const Var<T>&, const Tensor<T>&);                \
  template Var<T> warp_horizontal(Graph<T>&, const Var<T>&, const DisparityMap&);             \
  template Var<T> auto_shift_conv(Graph<T>&, const Var<T>&, const Var<T>&, const Tensor<T>&, \
                                  const Var<T>&, const Var<T>&, int);

SHIFTCONV_INSTANTIATE_MATCHING(float)
SHIFTCONV_INSTANTIATE_MATCHING(double)

#undef SHIFTCONV_INSTANTIATE_MATCHING

}  // namespace shiftconv
