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

#include "gradient_suite.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <stdexcept>

#include "shiftconv/grad_check.hpp"
#include "shiftconv/losses.hpp"
#include "shiftconv/matching.hpp"
#include "shiftconv/network.hpp"
#include "shiftconv/ops.hpp"
#include "shiftconv/resize.hpp"
#include "test_util.hpp"

namespace shiftconv::testing {
namespace {

using Vars = std::vector<Var<double>>;
using MultiFn = std::function<Var<double>(Graph<double>&, const Vars&)>;

void merge(GradCaseResult& into, const GradCheckResult& r) {
  into.max_rel_error = std::max(into.max_rel_error, r.max_rel_error);
  into.checked += r.checked;
  into.skipped += r.skipped;
}

// Checks fn w.r.t. each of `inputs` in turn, holding the others constant.
void check_each_input(GradCaseResult& result, const std::vector<Tensor<double>>& inputs,
                      const MultiFn& fn, bool kinks, std::size_t max_coords = 0,
                      std::uint64_t seed = 0) {
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto single = [&](Graph<double>& g, const Var<double>& x) {
      Vars vs;
      for (std::size_t j = 0; j < inputs.size(); ++j) {
        vs.push_back(j == k ? x : make_var(inputs[j], false));
      }
      return fn(g, vs);
    };
    GradCheckOptions opt;
    opt.skip_kinks = kinks;
    opt.max_coords = max_coords;
    opt.seed = seed + k;
    merge(result, grad_check(single, inputs[k], opt));
  }
}

// sum(y * r) for a fixed random r, so every output element carries a
// distinct weight.
Var<double> project(Graph<double>& g, const Var<double>& y, std::uint64_t seed) {
  return ops::sum(g, ops::mul(g, y, make_var(random_tensor<double>(y->value.shape(), seed), false)));
}

using CaseFn = std::function<void(GradCaseResult&, std::uint64_t seed)>;

void case_conv2d(GradCaseResult& r, std::uint64_t s) {
  const int stride = 1 + static_cast<int>(s % 2);
  check_each_input(r,
                   {random_tensor<double>(Shape{2, 3, 6, 5}, s), random_tensor<double>(Shape{4, 3, 3, 3}, s + 1),
                    random_tensor<double>(Shape{1, 4, 1, 1}, s + 2)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, ops::conv2d(g, v[0], v[1], v[2], stride, 1), s + 3);
                   },
                   false);
}

void case_transposed_conv2d(GradCaseResult& r, std::uint64_t s) {
  check_each_input(r,
                   {random_tensor<double>(Shape{2, 3, 3, 4}, s), random_tensor<double>(Shape{3, 2, 4, 4}, s + 1),
                    random_tensor<double>(Shape{1, 2, 1, 1}, s + 2)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, ops::transposed_conv2d(g, v[0], v[1], v[2]), s + 3);
                   },
                   false);
}

void case_maxpool2d(GradCaseResult& r, std::uint64_t s) {
  check_each_input(r, {random_tensor<double>(Shape{2, 2, 4, 6}, s)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, ops::maxpool2d(g, v[0]), s + 1);
                   },
                   true);
}

void case_leaky_relu(GradCaseResult& r, std::uint64_t s) {
  check_each_input(r, {random_tensor<double>(Shape{2, 3, 4, 4}, s)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, ops::leaky_relu(g, v[0]), s + 1);
                   },
                   true);
}

void case_concat(GradCaseResult& r, std::uint64_t s) {
  check_each_input(r,
                   {random_tensor<double>(Shape{2, 2, 3, 4}, s), random_tensor<double>(Shape{2, 3, 3, 4}, s + 1),
                    random_tensor<double>(Shape{2, 1, 3, 4}, s + 2)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, ops::concat_channels(g, v), s + 3);
                   },
                   false);
}

void case_hslice_pad(GradCaseResult& r, std::uint64_t s) {
  const int d = static_cast<int>(s % 7) - 3;
  check_each_input(r, {random_tensor<double>(Shape{2, 2, 3, 6}, s)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, ops::hslice_pad(g, v[0], d), s + 1);
                   },
                   false);
}

void case_shift_concat(GradCaseResult& r, std::uint64_t s) {
  const int d = static_cast<int>(s % 7) - 3;
  check_each_input(r,
                   {random_tensor<double>(Shape{2, 2, 3, 6}, s), random_tensor<double>(Shape{2, 2, 3, 6}, s + 1)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, shift_concat(g, v[0], v[1], d), s + 2);
                   },
                   false);
}

void shift_conv_case(GradCaseResult& r, std::uint64_t s, ShiftConvVariant variant) {
  ShiftConvConfig cfg;
  cfg.maxdisp = 2;
  cfg.clue_filters = 3;
  cfg.variant = variant;
  const int c = 2;
  check_each_input(r,
                   {random_tensor<double>(Shape{1, c, 4, 7}, s), random_tensor<double>(Shape{1, c, 4, 7}, s + 1),
                    random_tensor<double>(cfg.weight_shape(c), s + 2), random_tensor<double>(cfg.bias_shape(), s + 3)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, shift_conv_layer(g, v[0], v[1], cfg, v[2], v[3]), s + 4);
                   },
                   true);
}

void case_shift_conv_per_scale(GradCaseResult& r, std::uint64_t s) {
  shift_conv_case(r, s, ShiftConvVariant::ConvPerScaleThenConcat);
}

void case_shift_conv_concat_first(GradCaseResult& r, std::uint64_t s) {
  shift_conv_case(r, s, ShiftConvVariant::ConcatAllThenConv);
}

void case_correlation(GradCaseResult& r, std::uint64_t s) {
  check_each_input(r,
                   {random_tensor<double>(Shape{2, 3, 3, 7}, s), random_tensor<double>(Shape{2, 3, 3, 7}, s + 1)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, correlation_1d(g, v[0], v[1], 3), s + 2);
                   },
                   false);
}

void case_warp(GradCaseResult& r, std::uint64_t s) {
  const Tensor<double> disp = random_tensor<double>(Shape{1, 1, 3, 8}, s + 1, -1.0, 4.0);
  check_each_input(r, {random_tensor<double>(Shape{1, 2, 3, 8}, s)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, warp_horizontal(g, v[0], disp), s + 2);
                   },
                   false);
}

void case_auto_shift(GradCaseResult& r, std::uint64_t s) {
  const Tensor<double> base = random_tensor<double>(Shape{1, 1, 4, 8}, s + 4, 0.0, 3.0);
  check_each_input(r,
                   {random_tensor<double>(Shape{1, 2, 4, 8}, s), random_tensor<double>(Shape{1, 2, 4, 8}, s + 1),
                    random_tensor<double>(Shape{kAutoShiftFilters, 4, 3, 3}, s + 2),
                    random_tensor<double>(Shape{1, kAutoShiftFilters, 1, 1}, s + 3)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, auto_shift_conv(g, v[0], v[1], base, v[2], v[3]), s + 5);
                   },
                   true);
}

void case_smooth_l1(GradCaseResult& r, std::uint64_t s) {
  check_each_input(r, {random_tensor<double>(Shape{1, 2, 4, 5}, s, -3.0, 3.0)},
                   [&](Graph<double>& g, const Vars& v) {
                     return project(g, smooth_l1(g, v[0]), s + 1);
                   },
                   true);
}

LossConfig test_loss_config() {
  LossConfig c;
  c.alpha1 = 0.3;
  c.alpha2 = 0.7;
  c.beta2 = 0.2;
  return c;
}

void case_loss1(GradCaseResult& r, std::uint64_t s) {
  Tensor<double> target = random_tensor<double>(Shape{2, 1, 4, 6}, s + 1, 0.0, 5.0);
  target[3] = -1.0;  // invalid pixel, excluded by the mask
  const LossConfig cfg = test_loss_config();
  check_each_input(r,
                   {random_tensor<double>(Shape{2, 1, 4, 6}, s, 0.0, 5.0),
                    random_tensor<double>(Shape{3, 2, 3, 3}, s + 2), random_tensor<double>(Shape{1, 4, 1, 1}, s + 3)},
                   [&](Graph<double>& g, const Vars& v) {
                     return loss1(g, v[0], target, {v[1], v[2]}, cfg);
                   },
                   true);
}

void case_loss2(GradCaseResult& r, std::uint64_t s) {
  const Tensor<double> target = random_tensor<double>(Shape{1, 1, 8, 8}, s + 1, 0.0, 6.0);
  const Tensor<double> small_target = resize_nearest(target, 2, 2, true);
  const LossConfig cfg = test_loss_config();
  check_each_input(r,
                   {random_tensor<double>(Shape{1, 1, 8, 8}, s, 0.0, 6.0),
                    random_tensor<double>(Shape{1, 1, 2, 2}, s + 2, 0.0, 2.0),
                    random_tensor<double>(Shape{2, 2, 3, 3}, s + 3)},
                   [&](Graph<double>& g, const Vars& v) {
                     return loss2(g, v[0], target, v[1], small_target, {v[2]}, cfg);
                   },
                   true);
}

NetworkConfig tiny_network() {
  NetworkConfig c;
  c.image_channels = 1;
  c.feat_channels = {2, 2, 3, 3};
  c.redir_channels = 2;
  c.encode_channels = {3, 3, 3, 3};
  c.decode_channels = {3, 3, 3, 3, 2, 2};
  c.shift_cfg.maxdisp = 2;
  c.shift_cfg.clue_filters = 2;
  c.refine_enabled = true;
  return c;
}

// Stage-2 loss of the full network (refinement on) with the left image as a
// tracked input.
Var<double> network_loss(Graph<double>& g, const Network<double>& net, const Var<double>& left,
                         const Var<double>& right, const Tensor<double>& target) {
  ForwardOutputs<double> out;
  const auto lf = net.feature_extract(g, left);
  const auto rf = net.feature_extract(g, right);
  out.feat_skips = {lf.skip_half, lf.skip_quarter};
  out.cost_volume = net.cost_volume(g, lf.feat, rf.feat);
  const auto enc = net.encode(g, out.cost_volume, lf.feat);
  const auto dec = net.decode(g, enc.bottleneck, enc.skips, out.feat_skips, left);
  out.coarse = dec.coarse;
  out.small = dec.small;
  out.refined = net.refine(g, out, left, right);
  const int s = net.config().small_map_scale;
  const Tensor<double> small_target =
      resize_nearest(target, target.shape().h / s, target.shape().w / s, true);
  return loss2(g, out.refined, target, out.small, small_target, net.params().decayed(),
               test_loss_config());
}

void case_network(GradCaseResult& r, std::uint64_t s) {
  const NetworkConfig cfg = tiny_network();
  Network<double> net(cfg, s);
  const Tensor<double> left = random_tensor<double>(Shape{1, 1, 64, 64}, s + 1, 0.0, 1.0);
  const Tensor<double> right = random_tensor<double>(Shape{1, 1, 64, 64}, s + 2, 0.0, 1.0);
  const Tensor<double> target = random_tensor<double>(Shape{1, 1, 64, 64}, s + 3, 0.0, 4.0);

  GradCheckOptions opt;
  opt.skip_kinks = true;
  opt.max_coords = 2;
  auto& entries = net.params().entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Var<double> saved = entries[k].var;
    auto fn = [&](Graph<double>& g, const Var<double>& x) {
      entries[k].var = x;
      auto loss = network_loss(g, net, make_var(left, false), make_var(right, false), target);
      entries[k].var = saved;
      return loss;
    };
    opt.seed = s * 131 + k;
    merge(r, grad_check(fn, saved->value, opt));
    entries[k].var = saved;
  }
  opt.max_coords = 8;
  opt.seed = s;
  merge(r, grad_check(
               [&](Graph<double>& g, const Var<double>& x) {
                 return network_loss(g, net, x, make_var(right, false), target);
               },
               left, opt));
}

const std::vector<std::pair<std::string, CaseFn>>& cases() {
  static const std::vector<std::pair<std::string, CaseFn>> all = {
      {"conv2d", case_conv2d},
      {"transposed_conv2d", case_transposed_conv2d},
      {"maxpool2d", case_maxpool2d},
      {"leaky_relu", case_leaky_relu},
      {"concat_channels", case_concat},
      {"hslice_pad", case_hslice_pad},
      {"shift_concat", case_shift_concat},
      {"shift_conv_layer/conv_then_concat", case_shift_conv_per_scale},
      {"shift_conv_layer/concat_then_conv", case_shift_conv_concat_first},
      {"correlation_1d", case_correlation},
      {"warp_horizontal", case_warp},
      {"auto_shift_conv", case_auto_shift},
      {"smooth_l1", case_smooth_l1},
      {"loss1", case_loss1},
      {"loss2", case_loss2},
      {"full_network", case_network},
  };
  return all;
}

}  // namespace

std::vector<std::string> gradient_case_names() {
  std::vector<std::string> names;
  for (const auto& c : cases()) names.push_back(c.first);
  return names;
}

GradCaseResult run_gradient_case(const std::string& name, int points) {
  for (const auto& [n, fn] : cases()) {
    if (n != name) continue;
    GradCaseResult r;
    r.name = n;
    for (int p = 0; p < points; ++p) {
      fn(r, 1000 + 17 * static_cast<std::uint64_t>(p));
      ++r.points;
    }
    return r;
  }
  throw std::invalid_argument("unknown gradient case " + name);
}

std::vector<GradCaseResult> run_gradient_suite(int points) {
  std::vector<GradCaseResult> out;
  for (const auto& name : gradient_case_names()) out.push_back(run_gradient_case(name, points));
  return out;
}

}  // namespace shiftconv::testing
