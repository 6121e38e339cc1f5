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

#include "shiftconv/network.hpp"

#include <cmath>
#include <random>

#include "shiftconv/ops.hpp"
#include "shiftconv/resize.hpp"

namespace shiftconv {

std::string to_string(CostVolumeKind k) {
  return k == CostVolumeKind::ShiftConv ? "shiftconv" : "corr";
}

CostVolumeKind parse_cost_volume(const std::string& s) {
  if (s == "shiftconv") return CostVolumeKind::ShiftConv;
  if (s == "corr") return CostVolumeKind::Correlation;
  throw ContractError("unknown cost volume '" + s + "' (expected shiftconv or corr)");
}

void NetworkConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v < 1) throw ContractError(std::string("NetworkConfig: ") + what + " must be >= 1");
  };
  positive(image_channels, "image_channels");
  for (int c : feat_channels) positive(c, "feat_channels");
  positive(redir_channels, "redir_channels");
  for (int c : encode_channels) positive(c, "encode_channels");
  for (int c : decode_channels) positive(c, "decode_channels");
  shift_cfg.validate();
  small_block();
}

void NetworkConfig::validate_input(int height, int width) const {
  if (height <= 0 || height % 64 != 0) {
    throw ContractError("input height " + std::to_string(height) + " is not divisible by 64");
  }
  if (width <= 0 || width % 64 != 0) {
    throw ContractError("input width " + std::to_string(width) + " is not divisible by 64");
  }
  if (shift_cfg.maxdisp >= width / 4) {
    throw ContractError("maxdisp " + std::to_string(shift_cfg.maxdisp) +
                        " must be < feature width " + std::to_string(width / 4));
  }
}

int NetworkConfig::cost_channels() const {
  return cost_volume == CostVolumeKind::ShiftConv ? shift_cfg.output_channels()
                                                  : shift_cfg.maxdisp + 1;
}

int NetworkConfig::small_block() const {
  // Block k outputs at 1 / 2^(5 - k).
  for (int k = 0; k < 6; ++k) {
    if ((1 << (5 - k)) == small_map_scale) return k;
  }
  throw ContractError("NetworkConfig: small_map_scale " + std::to_string(small_map_scale) +
                      " must be a power of two in [1, 32]");
}

NetworkConfig NetworkConfig::desk() {
  NetworkConfig cfg;
  cfg.feat_channels = {16, 16, 32, 32};
  cfg.redir_channels = 16;
  cfg.encode_channels = {64, 96, 128, 128};
  cfg.decode_channels = {96, 64, 48, 32, 16, 16};
  cfg.shift_cfg.maxdisp = 8;
  cfg.shift_cfg.clue_filters = 8;
  return cfg;
}

template <typename T>
Var<T> ParameterStore<T>::add(std::string name, Tensor<T> init, bool decays) {
  if (find(name)) throw ContractError("ParameterStore: duplicate parameter '" + name + "'");
  auto v = make_var(std::move(init), true);
  entries_.push_back(Entry{std::move(name), v, decays});
  return v;
}

template <typename T>
const Var<T>* ParameterStore<T>::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e.var;
  }
  return nullptr;
}

template <typename T>
const Var<T>& ParameterStore<T>::get(std::string_view name) const {
  const Var<T>* v = find(name);
  if (!v) throw ContractError("ParameterStore: no parameter named '" + std::string(name) + "'");
  return *v;
}

template <typename T>
std::vector<Var<T>> ParameterStore<T>::decayed() const {
  std::vector<Var<T>> out;
  for (const auto& e : entries_) {
    if (e.decays) out.push_back(e.var);
  }
  return out;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& e : entries_) e.var->zero_grad();
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.var->value.numel();
  return n;
}

template <typename T>
std::vector<typename Network<T>::ParamSpec> Network<T>::parameter_layout(const NetworkConfig& cfg) {
  cfg.validate();
  std::vector<ParamSpec> specs;
  auto conv = [&](const std::string& name, int in_c, int out_c) {
    specs.push_back({name + ".weight", Shape{out_c, in_c, 3, 3}, true, in_c * 9});
    specs.push_back({name + ".bias", Shape{1, out_c, 1, 1}, false, 0});
  };
  auto deconv = [&](const std::string& name, int in_c, int out_c) {
    // Each output pixel of a stride-2 4x4 deconv sees in_c * 2 * 2 inputs.
    specs.push_back({name + ".weight", Shape{in_c, out_c, 4, 4}, true, in_c * 4});
    specs.push_back({name + ".bias", Shape{1, out_c, 1, 1}, false, 0});
  };
  const auto& f = cfg.feat_channels;
  const auto& e = cfg.encode_channels;
  const auto& d = cfg.decode_channels;

  conv("feat.conv1", cfg.image_channels, f[0]);
  conv("feat.conv2", f[0], f[1]);
  conv("feat.conv3", f[1], f[2]);
  conv("feat.conv4", f[2], f[3]);

  if (cfg.cost_volume == CostVolumeKind::ShiftConv) {
    const Shape ws = cfg.shift_cfg.weight_shape(f[3]);
    specs.push_back({"costvol.weight", ws, true, ws.c * 9});
    specs.push_back({"costvol.bias", cfg.shift_cfg.bias_shape(), false, 0});
  }
  conv("encode.redir", f[3], cfg.redir_channels);
  conv("encode.conv5", cfg.cost_channels() + cfg.redir_channels, e[0]);
  conv("encode.conv6", e[0], e[1]);
  conv("encode.conv7", e[1], e[2]);
  conv("encode.conv8", e[2], e[3]);

  // Skip channels joined after each block's upsampling: encoder /32, /16, /8,
  // left features /4 and /2, left image /1.
  const std::array<int, 6> skip = {e[2], e[1], e[0], f[3], f[3], cfg.image_channels};
  int prev = e[3];
  for (int k = 0; k < 6; ++k) {
    const std::string block = "decode.block" + std::to_string(k + 1);
    deconv(block + ".deconv", prev, d[k]);
    conv(block + ".smooth", d[k] + skip[k], d[k]);
    prev = d[k];
  }
  conv("decode.small_head", d[cfg.small_block()], 1);
  conv("decode.coarse_head", d[5], 1);

  conv("refine.match", 2 * cfg.image_channels, kAutoShiftFilters);
  conv("refine.conv1", kAutoShiftFilters + 1, 16);
  conv("refine.conv2", 16, 32);
  conv("refine.conv3", 32, 1);
  return specs;
}

template <typename T>
Network<T>::Network(NetworkConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  std::mt19937_64 rng(seed);
  for (const auto& spec : parameter_layout(cfg_)) {
    Tensor<T> init(spec.shape);
    if (spec.decays) {
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / spec.fan_in));
      for (auto& v : init.data()) v = static_cast<T>(dist(rng));
    }
    params_.add(spec.name, std::move(init), spec.decays);
  }
}

template <typename T>
Network<T>::Network(NetworkConfig cfg, ParameterStore<T> params) : cfg_(std::move(cfg)) {
  std::string problems;
  for (const auto& spec : parameter_layout(cfg_)) {
    const Var<T>* v = params.find(spec.name);
    if (!v) {
      problems += "\n  missing tensor " + spec.name + " " + spec.shape.str();
      continue;
    }
    if ((*v)->value.shape() != spec.shape) {
      problems += "\n  tensor " + spec.name + " has shape " + (*v)->value.shape().str() +
                  ", config expects " + spec.shape.str();
      continue;
    }
    params_.add(spec.name, (*v)->value, spec.decays);
  }
  for (const auto& e : params.entries()) {
    if (!params_.find(e.name)) problems += "\n  unexpected tensor " + e.name;
  }
  if (!problems.empty()) throw DataError("parameters do not match network config:" + problems);
}

template <typename T>
Var<T> Network<T>::conv(Graph<T>& g, const std::string& name, const Var<T>& x,
                        bool activate) const {
  auto y = ops::conv2d(g, x, params_.get(name + ".weight"), params_.get(name + ".bias"), 1, 1);
  return activate ? ops::leaky_relu(g, y) : y;
}

template <typename T>
Var<T> Network<T>::deconv(Graph<T>& g, const std::string& name, const Var<T>& x) const {
  return ops::leaky_relu(g, ops::transposed_conv2d(g, x, params_.get(name + ".weight"),
                                                   params_.get(name + ".bias"), 2, 1));
}

template <typename T>
FeatureOutputs<T> Network<T>::feature_extract(Graph<T>& g, const Var<T>& image) const {
  const Shape s = image->value.shape();
  if (s.h % 4 != 0 || s.w % 4 != 0) {
    throw ContractError("feature_extract: extents " + s.str() + " not divisible by 4");
  }
  if (s.c != cfg_.image_channels) {
    throw ContractError("feature_extract: image has " + std::to_string(s.c) +
                        " channels, config expects " + std::to_string(cfg_.image_channels));
  }
  auto x = conv(g, "feat.conv1", image, true);
  x = conv(g, "feat.conv2", x, true);
  x = ops::maxpool2d(g, x);
  x = conv(g, "feat.conv3", x, true);
  auto half = conv(g, "feat.conv4", x, true);
  auto quarter = ops::maxpool2d(g, half);
  return {quarter, half, quarter};
}

template <typename T>
Var<T> Network<T>::cost_volume(Graph<T>& g, const Var<T>& left_feat,
                               const Var<T>& right_feat) const {
  if (cfg_.cost_volume == CostVolumeKind::Correlation) {
    return correlation_1d(g, left_feat, right_feat, cfg_.shift_cfg.maxdisp);
  }
  return shift_conv_layer(g, left_feat, right_feat, cfg_.shift_cfg, params_.get("costvol.weight"),
                          params_.get("costvol.bias"));
}

template <typename T>
EncodeOutputs<T> Network<T>::encode(Graph<T>& g, const Var<T>& cost,
                                    const Var<T>& left_feat) const {
  const Shape cs = cost->value.shape();
  const Shape fs = left_feat->value.shape();
  if (cs.n != fs.n || cs.h != fs.h || cs.w != fs.w) {
    throw ContractError("encode: cost volume " + cs.str() + " and left features " + fs.str() +
                        " differ spatially");
  }
  auto redir = conv(g, "encode.redir", left_feat, true);
  auto x = ops::concat_channels(g, {cost, redir});
  EncodeOutputs<T> out;
  const char* names[] = {"encode.conv5", "encode.conv6", "encode.conv7", "encode.conv8"};
  for (int i = 0; i < 4; ++i) {
    x = ops::maxpool2d(g, conv(g, names[i], x, true));
    if (i < 3) out.skips[i] = x;
  }
  out.bottleneck = x;
  return out;
}

template <typename T>
DecodeOutputs<T> Network<T>::decode(Graph<T>& g, const Var<T>& bottleneck,
                                    const std::array<Var<T>, 3>& encoder_skips,
                                    const std::array<Var<T>, 2>& feat_skips,
                                    const Var<T>& left_image) const {
  // Resolution order of the skip joined after each block's upsampling.
  const std::array<Var<T>, 6> skips = {encoder_skips[2], encoder_skips[1], encoder_skips[0],
                                       feat_skips[1],    feat_skips[0],    left_image};
  DecodeOutputs<T> out;
  Var<T> x = bottleneck;
  for (int k = 0; k < 6; ++k) {
    const std::string block = "decode.block" + std::to_string(k + 1);
    x = deconv(g, block + ".deconv", x);
    const Shape xs = x->value.shape();
    const Shape ss = skips[k] ? skips[k]->value.shape() : Shape{};
    if (!skips[k] || ss.n != xs.n || ss.h != xs.h || ss.w != xs.w) {
      throw ContractError("decode: skip for " + block + " has shape " + ss.str() +
                          ", upsampled map is " + xs.str());
    }
    x = conv(g, block + ".smooth", ops::concat_channels(g, {x, skips[k]}), true);
    if (k == cfg_.small_block()) out.small = conv(g, "decode.small_head", x, false);
  }
  out.state = x;
  out.coarse = conv(g, "decode.coarse_head", x, false);
  return out;
}

template <typename T>
Tensor<T> upsample_disparity(const Tensor<T>& small, int scale) {
  const Shape s = small.shape();
  return resize_nearest(small, s.h * scale, s.w * scale, true);
}

template <typename T>
Var<T> Network<T>::refine(Graph<T>& g, const ForwardOutputs<T>& outputs,
                          const Var<T>& left_image, const Var<T>& right_image) const {
  if (!outputs.small || !outputs.coarse) {
    throw ContractError("refine: forward outputs lack the small or coarse disparity map");
  }
  const Tensor<T> base = upsample_disparity(outputs.small->value, cfg_.small_map_scale);
  auto match = auto_shift_conv(g, left_image, right_image, base, params_.get("refine.match.weight"),
                               params_.get("refine.match.bias"), 2);
  auto x = ops::concat_channels(g, {match, outputs.coarse});
  x = conv(g, "refine.conv1", x, true);
  x = conv(g, "refine.conv2", x, true);
  return conv(g, "refine.conv3", x, false);
}

template <typename T>
ForwardOutputs<T> Network<T>::forward(Graph<T>& g, const Tensor<T>& left, const Tensor<T>& right,
                                      bool run_refine) const {
  if (left.shape() != right.shape()) {
    throw ContractError("forward: left " + left.shape().str() + " and right " +
                        right.shape().str() + " differ");
  }
  cfg_.validate_input(left.shape().h, left.shape().w);
  auto left_img = make_var(left);
  auto right_img = make_var(right);

  ForwardOutputs<T> out;
  const auto lf = feature_extract(g, left_img);
  const auto rf = feature_extract(g, right_img);
  out.left_feat = lf.feat;
  out.right_feat = rf.feat;
  out.feat_skips = {lf.skip_half, lf.skip_quarter};
  out.cost_volume = cost_volume(g, lf.feat, rf.feat);
  const auto enc = encode(g, out.cost_volume, lf.feat);
  out.encoder_skips = enc.skips;
  const auto dec = decode(g, enc.bottleneck, enc.skips, out.feat_skips, left_img);
  out.decoder_state = dec.state;
  out.coarse = dec.coarse;
  out.small = dec.small;
  if (run_refine) out.refined = refine(g, out, left_img, right_img);
  return out;
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class Network<float>;
template class Network<double>;
template Tensor<float> upsample_disparity(const Tensor<float>&, int);
template Tensor<double> upsample_disparity(const Tensor<double>&, int);

}  // namespace shiftconv
