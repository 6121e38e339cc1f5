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

#include <cstdint>

#include "shiftconv/losses.hpp"
#include "shiftconv/tensor.hpp"

namespace shiftconv {

struct StereoSample {
  Tensor<float> left;   // (1, C, H, W), values in [0, 1]
  Tensor<float> right;  // same shape as left
  DisparityMap gt_disp; // left reference, pixels
  PixelMask occlusion_mask;  // 1 = visible in both views
};

struct SynthConfig {
  int width = 128;
  int height = 64;
  int channels = 3;
  int num_shapes = 4;
  int disp_min = 2;
  int disp_max = 24;
  int background_disp = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

// Renders a textured background plane followed by num_shapes textured
// rectangles, nearest last, into both views. An element at disparity d that
// covers left column x covers right column x - d with the same texture
// coordinate, so visible pixels satisfy left[c,y,x] == right[c,y,x - d]
// exactly. Deterministic in cfg.seed.
StereoSample gen_synthetic_pair(const SynthConfig& cfg);

// Largest |left[c,y,x] - right[c,y,x - round(gt)]| over visible pixels
// (0 for a correct sample). Out-of-range right columns count as violations.
double correspondence_violation(const StereoSample& sample);

}  // namespace shiftconv
