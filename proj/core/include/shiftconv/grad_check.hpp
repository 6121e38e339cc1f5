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

#include <cstddef>
#include <cstdint>
#include <functional>

#include "shiftconv/autograd.hpp"

namespace shiftconv {

struct GradCheckOptions {
  double step = 1e-5;
  // Number of coordinates to probe; 0 probes every coordinate.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
  // Skip coordinates whose interval [x-h, x+h] contains a kink or jump
  // (ReLU corner, max-pool switch, rounding step); central differences are
  // meaningless there. Detected from extra evaluations at x and x +- h/2: on
  // a smooth interval the h and h/2 central and second differences agree to
  // O(h^2), a slope jump J breaks one of them by O(J).
  bool skip_kinks = false;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

// Scalar-valued function of one tensor, evaluated on the supplied graph.
using ScalarFn = std::function<Var<double>(Graph<double>&, const Var<double>&)>;

// Compares the reverse-mode gradient of fn at `point` with central differences
// (f(x+h) - f(x-h)) / 2h. Relative error per coordinate is
// |a - n| / max(|a|, |n|, 1e-8); the maximum is returned.
GradCheckResult grad_check(const ScalarFn& fn, const Tensor<double>& point,
                           const GradCheckOptions& options = {});

}  // namespace shiftconv
