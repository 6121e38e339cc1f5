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

#include "shiftconv/optimizer.hpp"

#include <cmath>

namespace shiftconv {

Adam::Adam(const ParameterStore<float>& params) {
  for (const auto& e : params.entries()) {
    m_.emplace_back(e.var->value.shape());
    v_.emplace_back(e.var->value.shape());
  }
}

void Adam::step(ParameterStore<float>& params, double lr) {
  auto& entries = params.entries();
  if (entries.size() != m_.size()) {
    throw ContractError("Adam::step: optimizer tracks " + std::to_string(m_.size()) +
                        " tensors, parameter store has " + std::to_string(entries.size()));
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& node = *entries[k].var;
    if (m_[k].shape() != node.value.shape()) {
      throw ContractError("Adam::step: moment shape mismatch for " + entries[k].name);
    }
    if (node.has_grad() && !node.grad.all_finite()) {
      throw NumericalError("non-finite gradient for parameter " + entries[k].name);
    }
  }

  ++steps_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& node = *entries[k].var;
    const bool has = node.has_grad();
    auto p = node.value.data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = has ? static_cast<double>(node.grad[i]) : 0.0;
      const double mi = kBeta1 * m[i] + (1.0 - kBeta1) * g;
      const double vi = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + kEpsilon);
      p[i] = static_cast<float>(p[i] - update);
    }
  }
}

}  // namespace shiftconv
