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

#include "shiftconv/tensor.hpp"

namespace shiftconv {

// Nearest-neighbour resize of every (n, c) plane. Source index along an axis is
// floor((dst + 0.5) * src_extent / dst_extent). With is_disparity the values
// are also multiplied by new_w / old_w so they stay in pixel units of the
// resized grid.
template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& input, int new_h, int new_w, bool is_disparity);

DisparityMap resize_nearest(const DisparityMap& input, int new_h, int new_w);

}  // namespace shiftconv
