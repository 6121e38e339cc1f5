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

#include <span>
#include <vector>

#include "shiftconv/autograd.hpp"

// Differentiable forward operators. Every op takes the graph it records into
// first; when the graph is not recording (or no input is tracked) the op is a
// plain forward computation.
//
// Conventions: NCHW layout, cross-correlation (no kernel flip), zero padding.
// Weights are (out_channels, in_channels, kH, kW); biases are (1, out_channels, 1, 1).
namespace shiftconv::ops {

// Degree of internal parallelism (batch samples are distributed over
// threads). Results are bit-identical for every setting.
void set_num_threads(int threads);
int num_threads();

template <typename T>
Var<T> conv2d(Graph<T>& g, const Var<T>& input, const Var<T>& weight, const Var<T>& bias,
              int stride, int padding);

// Adjoint of a strided conv2d. weight is (in_channels, out_channels, kH, kW),
// i.e. the same array a conv2d mapping out_channels -> in_channels would use.
// Output extent (in - 1) * stride - 2 * padding + k; with the default 4x4,
// stride 2, padding 1 that is exactly twice the input.
template <typename T>
Var<T> transposed_conv2d(Graph<T>& g, const Var<T>& input, const Var<T>& weight,
                         const Var<T>& bias, int stride = 2, int padding = 1);

// 2x2 window, stride 2. Gradient goes to the first maximum in row-major order.
template <typename T>
Var<T> maxpool2d(Graph<T>& g, const Var<T>& input);

template <typename T>
Var<T> leaky_relu(Graph<T>& g, const Var<T>& input, T slope = T(0.1));

template <typename T>
Var<T> concat_channels(Graph<T>& g, const std::vector<Var<T>>& inputs);

template <typename T>
Var<T> slice_channels(Graph<T>& g, const Var<T>& input, int first, int count);

// Horizontal shift with zero fill: out[..., x] = in[..., x + d] where that
// column exists, else 0. d > 0 slices from column d and pads on the right;
// d < 0 pads |d| zero columns on the left.
template <typename T>
Var<T> hslice_pad(Graph<T>& g, const Var<T>& input, int displacement);

template <typename T>
Var<T> add(Graph<T>& g, const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> sub(Graph<T>& g, const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> mul(Graph<T>& g, const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> scale(Graph<T>& g, const Var<T>& a, T factor);

// Reductions to a (1,1,1,1) scalar.
template <typename T>
Var<T> sum(Graph<T>& g, const Var<T>& a);

template <typename T>
Var<T> sum_squares(Graph<T>& g, const Var<T>& a);

// Sum of several scalars.
template <typename T>
Var<T> add_scalars(Graph<T>& g, const std::vector<Var<T>>& terms);

}  // namespace shiftconv::ops
