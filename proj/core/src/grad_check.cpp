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

#include "shiftconv/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace shiftconv {

namespace {

double evaluate(const ScalarFn& fn, const Tensor<double>& x) {
  Graph<double> g(false);
  auto v = make_var(x, false);
  auto out = fn(g, v);
  if (out->value.numel() != 1) throw ContractError("grad_check: function is not scalar-valued");
  return out->value[0];
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& fn, const Tensor<double>& point,
                           const GradCheckOptions& options) {
  Graph<double> g;
  auto x = make_var(point, true);
  auto loss = fn(g, x);
  g.backward(loss);
  const Tensor<double> analytic = x->has_grad() ? x->grad : Tensor<double>(point.shape());

  std::vector<std::size_t> coords(point.numel());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (options.max_coords != 0 && options.max_coords < coords.size()) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.max_coords);
    std::sort(coords.begin(), coords.end());
  }

  const double h = options.step;
  const double f0 = options.skip_kinks ? evaluate(fn, point) : 0.0;
  GradCheckResult result;
  Tensor<double> probe = point;
  auto at = [&](std::size_t i, double orig, double offset) {
    probe[i] = orig + offset;
    const double f = evaluate(fn, probe);
    probe[i] = orig;
    return f;
  };
  for (std::size_t i : coords) {
    const double orig = probe[i];
    const double fp = at(i, orig, h);
    const double fm = at(i, orig, -h);
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = analytic[i];
    const double rel =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    if (options.skip_kinks && rel >= 1e-6) {
      const double fp2 = at(i, orig, h / 2);
      const double fm2 = at(i, orig, -h / 2);
      const double central_half = (fp2 - fm2) / h;
      const double second = (fp - 2.0 * f0 + fm) / h;
      const double second_half = 4.0 * (fp2 - 2.0 * f0 + fm2) / h;
      // Rounding noise of the differences plus a small fraction of the slope.
      const double scale = std::max({std::abs(fp), std::abs(fm), std::abs(f0)});
      const double tol = 64.0 * std::numeric_limits<double>::epsilon() * scale / h +
                         1e-7 * std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (std::abs(numeric - central_half) > tol || std::abs(second - second_half) > tol) {
        ++result.skipped;
        continue;
      }
    }
    result.max_rel_error = std::max(result.max_rel_error, rel);
    ++result.checked;
  }
  return result;
}

}  // namespace shiftconv
