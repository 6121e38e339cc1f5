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

#include "shiftconv/network.hpp"

namespace shiftconv {

// Adaptive-moment optimizer with bias correction. Weight decay is part of the
// loss, not applied here.
class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  Adam() = default;
  explicit Adam(const ParameterStore<float>& params);

  // Applies one update using the gradients currently held by params.
  // Parameters without a gradient are treated as having a zero gradient.
  // A non-finite gradient aborts the step before anything is modified and
  // throws NumericalError naming the parameter.
  void step(ParameterStore<float>& params, double lr);

  std::uint64_t steps() const { return steps_; }
  void set_steps(std::uint64_t s) { steps_ = s; }
  std::vector<Tensor<float>>& first_moments() { return m_; }
  std::vector<Tensor<float>>& second_moments() { return v_; }
  const std::vector<Tensor<float>>& first_moments() const { return m_; }
  const std::vector<Tensor<float>>& second_moments() const { return v_; }

 private:
  std::vector<Tensor<float>> m_;
  std::vector<Tensor<float>> v_;
  std::uint64_t steps_ = 0;
};

}  // namespace shiftconv
