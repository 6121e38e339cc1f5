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

#include <string>
#include <vector>

#include "shiftconv/autograd.hpp"

// Cost-volume construction: the shift convolution layer (both ablation
// variants), the multiplicative 1D correlation baseline, and the
// disparity-guided horizontal warp used by the refinement head.
namespace shiftconv {

enum class ShiftConvVariant {
  ConvPerScaleThenConcat,  // one shared 2C->F conv per displacement, then concat
  ConcatAllThenConv,       // concat every displacement, then a single conv
};

std::string to_string(ShiftConvVariant v);
ShiftConvVariant parse_variant(const std::string& s);

struct ShiftConvConfig {
  int maxdisp = 40;
  int clue_filters = 16;
  ShiftConvVariant variant = ShiftConvVariant::ConvPerScaleThenConcat;
  bool both_directions = true;

  void validate() const;

  // 2 * maxdisp + 1 with both directions, maxdisp + 1 otherwise.
  int scale_count() const;

  // Displacements in channel-group order: +0, +1, ..., +maxdisp, then
  // -1, ..., -maxdisp. Output channels [k*F, (k+1)*F) belong to scales()[k].
  std::vector<int> scales() const;

  int output_channels() const { return clue_filters * scale_count(); }

  // Weight shape of the matching-clue convolution for `channels` input
  // feature channels.
  Shape weight_shape(int channels) const;
  Shape bias_shape() const;
};

// d >= 0: concat(hslice_pad(left, d), right); d < 0: concat(hslice_pad(right, d), left).
// Output (N, 2C, H, W).
template <typename T>
Var<T> shift_concat(Graph<T>& g, const Var<T>& left, const Var<T>& right, int displacement);

// Full shift convolution layer. Output (N, F*S, H, W) for both variants.
template <typename T>
Var<T> shift_conv_layer(Graph<T>& g, const Var<T>& left, const Var<T>& right,
                        const ShiftConvConfig& cfg, const Var<T>& weight, const Var<T>& bias);

// Channel d (0..maxdisp) at x is mean_c left[c,y,x] * right[c,y,x-d]; zero
// where x - d falls off the image.
template <typename T>
Var<T> correlation_1d(Graph<T>& g, const Var<T>& left, const Var<T>& right, int maxdisp);

// out[n,c,y,x] = source[n,c,y,x - round(disparity[y,x])], 0 when out of range.
// Rounding is half away from zero. disparity is (N,1,H,W) or (1,1,H,W) and is
// treated as a constant.
template <typename T>
Var<T> warp_horizontal(Graph<T>& g, const Var<T>& source, const Tensor<T>& disparity);

template <typename T>
Var<T> warp_horizontal(Graph<T>& g, const Var<T>& source, const DisparityMap& disparity);

// Refinement matching map: for each delta in [-delta_range, delta_range] the
// right image is warped by base_disp + delta, concatenated as
// (warped_right, left) and passed through one shared 3x3 conv + leaky ReLU;
// the per-delta results are summed. Output (N, weight.n, H, W).
template <typename T>
Var<T> auto_shift_conv(Graph<T>& g, const Var<T>& left_img, const Var<T>& right_img,
                       const Tensor<T>& base_disp, const Var<T>& weight, const Var<T>& bias,
                       int delta_range = 2);

inline constexpr int kAutoShiftFilters = 8;

}  // namespace shiftconv
