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

#include "shiftconv/losses.hpp"

#include <cmath>
#include <string>

#include "shiftconv/ops.hpp"

namespace shiftconv {

void LossConfig::validate() const {
  if (alpha1 < 0 || alpha2 < 0 || beta2 < 0) {
    throw ContractError("LossConfig: coefficients must be non-negative");
  }
}

template <typename T>
PixelMask valid_mask(const Tensor<T>& target) {
  PixelMask m(target.numel());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = std::isfinite(target[i]) && target[i] >= T(0) ? 1 : 0;
  }
  return m;
}

PixelMask valid_mask(const DisparityMap& target) {
  const auto v = target.values();
  PixelMask m(v.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::isfinite(v[i]) && v[i] >= 0.0f ? 1 : 0;
  return m;
}

namespace {

template <typename T>
T smooth_value(T x) {
  const T a = std::abs(x);
  return a < T(1) ? T(0.5) * x * x : a - T(0.5);
}

template <typename T>
T smooth_slope(T x) {
  if (std::abs(x) < T(1)) return x;
  return x > T(0) ? T(1) : T(-1);
}

template <typename T>
T abs_slope(T x) {
  return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0));
}

// Masked mean of kernel(pred - target) with kernel value/slope functions.
template <typename T, typename Value, typename Slope>
Var<T> masked_pixel_loss(Graph<T>& g, const char* op, const Var<T>& pred, const Tensor<T>& target,
                         Value value, Slope slope) {
  if (pred->value.shape() != target.shape()) {
    throw ContractError(std::string(op) + ": prediction " + pred->value.shape().str() +
                        " and target " + target.shape().str() + " differ");
  }
  PixelMask mask = valid_mask(target);
  std::size_t count = 0;
  T total = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    total += value(pred->value[i] - target[i]);
    ++count;
  }
  if (count == 0) throw ContractError(std::string(op) + ": no valid ground-truth pixels");
  const T inv = T(1) / static_cast<T>(count);
  return g.emit(op, {pred}, Tensor<T>(Shape{1, 1, 1, 1}, total * inv),
                [pred, target, mask = std::move(mask), inv, slope](const Tensor<T>& gout) {
                  auto& gp = pred->grad_buffer();
                  const T s = gout[0] * inv;
                  for (std::size_t i = 0; i < mask.size(); ++i) {
                    if (mask[i]) gp[i] += s * slope(pred->value[i] - target[i]);
                  }
                });
}

}  // namespace

template <typename T>
Var<T> smooth_l1(Graph<T>& g, const Var<T>& x) {
  Tensor<T> out = x->value;
  for (auto& v : out.data()) v = smooth_value(v);
  return g.emit("smooth_l1", {x}, std::move(out), [x](const Tensor<T>& gout) {
    auto& gx = x->grad_buffer();
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += gout[i] * smooth_slope(x->value[i]);
  });
}

template <typename T>
Var<T> smooth_l1_loss(Graph<T>& g, const Var<T>& pred, const Tensor<T>& target) {
  return masked_pixel_loss(g, "smooth_l1_loss", pred, target, smooth_value<T>, smooth_slope<T>);
}

template <typename T>
Var<T> l1_loss(Graph<T>& g, const Var<T>& pred, const Tensor<T>& target) {
  return masked_pixel_loss(
      g, "l1_loss", pred, target, [](T x) { return std::abs(x); }, abs_slope<T>);
}

template <typename T>
Var<T> weight_decay(Graph<T>& g, const std::vector<Var<T>>& weights) {
  std::vector<Var<T>> terms;
  terms.reserve(weights.size());
  for (const auto& w : weights) terms.push_back(ops::sum_squares(g, w));
  if (terms.empty()) return make_var(Tensor<T>(Shape{1, 1, 1, 1}));
  return ops::add_scalars(g, terms);
}

template <typename T>
Var<T> loss1(Graph<T>& g, const Var<T>& coarse, const Tensor<T>& target,
             const std::vector<Var<T>>& weights, const LossConfig& cfg) {
  cfg.validate();
  auto data = smooth_l1_loss(g, coarse, target);
  auto decay = ops::scale(g, weight_decay(g, weights), static_cast<T>(cfg.alpha1));
  return ops::add_scalars(g, {data, decay});
}

template <typename T>
Var<T> loss2(Graph<T>& g, const Var<T>& refined, const Tensor<T>& target, const Var<T>& small,
             const Tensor<T>& small_target, const std::vector<Var<T>>& weights,
             const LossConfig& cfg) {
  cfg.validate();
  auto data = smooth_l1_loss(g, refined, target);
  auto small_term = ops::scale(g, l1_loss(g, small, small_target), static_cast<T>(cfg.alpha2));
  auto decay = ops::scale(g, weight_decay(g, weights), static_cast<T>(cfg.beta2));
  return ops::add_scalars(g, {data, small_term, decay});
}

namespace {

template <typename Fn>
void for_each_scored(const DisparityMap& pred, const DisparityMap& gt, const PixelMask& mask,
                     const char* op, Fn fn) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw ContractError(std::string(op) + ": prediction and ground truth extents differ");
  }
  const auto p = pred.values();
  const auto t = gt.values();
  if (mask.size() != t.size()) {
    throw ContractError(std::string(op) + ": mask size does not match ground truth");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!mask[i] || !std::isfinite(t[i]) || t[i] < 0.0f) continue;
    fn(std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i])));
    ++count;
  }
  if (count == 0) throw ContractError(std::string(op) + ": empty mask");
}

}  // namespace

double epe(const DisparityMap& pred, const DisparityMap& gt, const PixelMask& mask) {
  double total = 0.0;
  std::size_t count = 0;
  for_each_scored(pred, gt, mask, "epe", [&](double err) {
    total += err;
    ++count;
  });
  return total / static_cast<double>(count);
}

double epe(const DisparityMap& pred, const DisparityMap& gt) {
  return epe(pred, gt, valid_mask(gt));
}

double d1_rate(const DisparityMap& pred, const DisparityMap& gt, const PixelMask& mask,
               double threshold) {
  std::size_t bad = 0;
  std::size_t count = 0;
  for_each_scored(pred, gt, mask, "d1_rate", [&](double err) {
    if (err > threshold) ++bad;
    ++count;
  });
  return static_cast<double>(bad) / static_cast<double>(count);
}

double d1_rate(const DisparityMap& pred, const DisparityMap& gt, double threshold) {
  return d1_rate(pred, gt, valid_mask(gt), threshold);
}

#define SHIFTCONV_INSTANTIATE_LOSSES(T)                                                       \
  template PixelMask valid_mask(const Tensor<T>&);                                            \
  template Var<T> smooth_l1(Graph<T>&, const Var<T>&);                                        \
  template Var<T> smooth_l1_loss(Graph<T>&, const Var<T>&, const Tensor<T>&);                 \
  template Var<T> l1_loss(Graph<T>&, const Var<T>&, const Tensor<T>&);                        \
  template Var<T> weight_decay(Graph<T>&, const std::vector<Var<T>>&);                        \
  template Var<T> loss1(Graph<T>&, const Var<T>&, const Tensor<T>&, const std::vector<Var<T>>&, \
                        const LossConfig&);                                                   \
  template Var<T> loss2(Graph<T>&, const Var<T>&, const Tensor<T>&, const Var<T>&,            \
                        const Tensor<T>&, const std::vector<Var<T>>&, const LossConfig&);

SHIFTCONV_INSTANTIATE_LOSSES(float)
SHIFTCONV_INSTANTIATE_LOSSES(double)

#undef SHIFTCONV_INSTANTIATE_LOSSES

}  // namespace shiftconv
