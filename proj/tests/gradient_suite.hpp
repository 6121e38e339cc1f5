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
#include <string>
#include <vector>

namespace shiftconv::testing {

struct GradCaseResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  int points = 0;
};

// Finite-difference checks (64-bit, step 1e-5) of every differentiable
// operation at `points` random points each, w.r.t. every tensor input.
// Coordinates within one step of a kink are excluded.
std::vector<GradCaseResult> run_gradient_suite(int points = 10);

// Only the case with the given name.
GradCaseResult run_gradient_case(const std::string& name, int points = 10);

std::vector<std::string> gradient_case_names();

}  // namespace shiftconv::testing
