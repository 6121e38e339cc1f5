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
#include <vector>

#include "shiftconv/autograd.hpp"

namespace shiftconv {

// alpha1: weight decay in the stage-1 loss. alpha2: weight of the small-map
// L1 term in the stage-2 loss. beta2: weight decay in the stage-2 loss.
struct LossConfig {
  double alpha1 = 1e-4;
  double alpha2 = 0.5;
  double beta2 = 1e-4;

  void validate() const;
};

// Pixel mask, 1 = pixel participates. Same layout as a DisparityMap / a
// (N,1,H,W) tensor plane sequence.
using PixelMask = std::vector<std::uint8_t>;

// Ground-truth pixels that are finite and non-negative.
template <typename T>
PixelMask valid_mask(const Tensor<T>& target);
PixelMask valid_mask(const DisparityMap& target);

// Elementwise 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise.
template <typename T>
Var<T> smooth_l1(Graph<T>& g, const Var<T>& x);

// Mean over valid target pixels of smooth_l1(pred - target).
template <typename T>
Var<T> smooth_l1_loss(Graph<T>& g, const Var<T>& pred, const Tensor<T>& target);

// Mean over valid target pixels of |pred - target|.
template <typename T>
Var<T> l1_loss(Graph<T>& g, const Var<T>& pred, const Tensor<T>& target);

// Sum of squared entries over all given tensors.
template <typename T>
Var<T> weight_decay(Graph<T>& g, const std::vector<Var<T>>& weights);

// smooth_l1_loss(p_c, T) + alpha1 * sum w^2 (biases are not passed in).
template <typename T>
Var<T> loss1(Graph<T>& g, const Var<T>& coarse, const Tensor<T>& target,
             const std::vector<Var<T>>& weights, const LossConfig& cfg);

// smooth_l1_loss(p_f, T) + alpha2 * l1_loss(p_s, T_s) + beta2 * sum w^2.
template <typename T>
Var<T> loss2(Graph<T>& g, const Var<T>& refined, const Tensor<T>& target, const Var<T>& small,
             const Tensor<T>& small_target, const std::vector<Var<T>>& weights,
             const LossConfig& cfg);

// End-point error: mean |pred - gt| over pixels that are set in `mask` and
// have valid ground truth.
double epe(const DisparityMap& pred, const DisparityMap& gt, const PixelMask& mask);
double epe(const DisparityMap& pred, const DisparityMap& gt);

// Fraction in [0,1] of masked pixels with |pred - gt| > threshold.
double d1_rate(const DisparityMap& pred, const DisparityMap& gt, const PixelMask& mask,
               double threshold = 3.0);
double d1_rate(const DisparityMap& pred, const DisparityMap& gt, double threshold = 3.0);

}  // namespace shiftconv
