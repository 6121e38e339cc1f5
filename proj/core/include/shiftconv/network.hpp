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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "shiftconv/autograd.hpp"
#include "shiftconv/matching.hpp"

namespace shiftconv {

enum class CostVolumeKind { ShiftConv, Correlation };

std::string to_string(CostVolumeKind k);
CostVolumeKind parse_cost_volume(const std::string& s);

struct NetworkConfig {
  int image_channels = 3;
  std::array<int, 4> feat_channels{32, 32, 64, 64};          // conv1..conv4
  int redir_channels = 32;                                   // conv_redir
  std::array<int, 4> encode_channels{128, 256, 512, 512};    // conv5..conv8
  std::array<int, 6> decode_channels{256, 128, 64, 32, 16, 16};
  ShiftConvConfig shift_cfg{};
  CostVolumeKind cost_volume = CostVolumeKind::ShiftConv;
  bool refine_enabled = false;
  int small_map_scale = 4;

  void validate() const;
  // Input extents must be divisible by 64 and wide enough for maxdisp at /4.
  void validate_input(int height, int width) const;

  int cost_channels() const;
  // Decoder block (0-based) whose output is at 1/small_map_scale.
  int small_block() const;

  // Reduced widths for desk-scale training and tests.
  static NetworkConfig desk();
};

// Named trainable tensors in creation order.
template <typename T>
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Var<T> var;
    bool decays;  // included in the weight-decay term (weights yes, biases no)
  };

  Var<T> add(std::string name, Tensor<T> init, bool decays);
  const Var<T>& get(std::string_view name) const;
  const Var<T>* find(std::string_view name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  std::vector<Var<T>> decayed() const;
  void zero_grad();
  std::size_t scalar_count() const;

  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& e : entries_) out.add(e.name, e.var->value.template cast<U>(), e.decays);
    return out;
  }

 private:
  std::vector<Entry> entries_;
};

template <typename T>
struct FeatureOutputs {
  Var<T> feat;          // /4, feat_channels[3]
  Var<T> skip_half;     // conv4 activation at /2
  Var<T> skip_quarter;  // pooled /4 map (same tensor as feat)
};

template <typename T>
struct EncodeOutputs {
  Var<T> bottleneck;                 // /64
  std::array<Var<T>, 3> skips;       // pooled conv5..conv7 at /8, /16, /32
};

template <typename T>
struct DecodeOutputs {
  Var<T> state;   // final block output at full resolution
  Var<T> coarse;  // (N,1,H,W)
  Var<T> small;   // (N,1,H/s,W/s), small-grid pixel units
};

template <typename T>
struct ForwardOutputs {
  Var<T> coarse;
  Var<T> small;
  Var<T> refined;  // null when refinement did not run
  Var<T> cost_volume;
  Var<T> left_feat;
  Var<T> right_feat;
  std::array<Var<T>, 2> feat_skips;  // left branch only: /2, /4
  std::array<Var<T>, 3> encoder_skips;
  Var<T> decoder_state;
};

// The full disparity network. Left and right images share one feature
// extractor; only the left branch feeds the decoder skips.
template <typename T>
class Network {
 public:
  // Fresh parameters: Gaussian with variance 2 / fan_in, zero biases.
  Network(NetworkConfig cfg, std::uint64_t seed);
  // Adopts existing parameters; every expected tensor must be present with
  // the shape implied by cfg.
  Network(NetworkConfig cfg, ParameterStore<T> params);

  const NetworkConfig& config() const { return cfg_; }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }

  FeatureOutputs<T> feature_extract(Graph<T>& g, const Var<T>& image) const;
  Var<T> cost_volume(Graph<T>& g, const Var<T>& left_feat, const Var<T>& right_feat) const;
  EncodeOutputs<T> encode(Graph<T>& g, const Var<T>& cost, const Var<T>& left_feat) const;
  DecodeOutputs<T> decode(Graph<T>& g, const Var<T>& bottleneck,
                          const std::array<Var<T>, 3>& encoder_skips,
                          const std::array<Var<T>, 2>& feat_skips,
                          const Var<T>& left_image) const;
  Var<T> refine(Graph<T>& g, const ForwardOutputs<T>& outputs, const Var<T>& left_image,
                const Var<T>& right_image) const;

  ForwardOutputs<T> forward(Graph<T>& g, const Tensor<T>& left, const Tensor<T>& right,
                            bool run_refine) const;
  ForwardOutputs<T> forward(Graph<T>& g, const Tensor<T>& left, const Tensor<T>& right) const {
    return forward(g, left, right, cfg_.refine_enabled);
  }

  // Expected (name, shape, decays) list for a config.
  struct ParamSpec {
    std::string name;
    Shape shape;
    bool decays;
    int fan_in;
  };
  static std::vector<ParamSpec> parameter_layout(const NetworkConfig& cfg);

 private:
  Var<T> conv(Graph<T>& g, const std::string& name, const Var<T>& x, bool activate) const;
  Var<T> deconv(Graph<T>& g, const std::string& name, const Var<T>& x) const;

  NetworkConfig cfg_;
  ParameterStore<T> params_;
};

// Nearest-neighbour upsampling of the small map by `scale` with the values
// converted to full-resolution pixels (multiplied by scale). Not differentiable.
template <typename T>
Tensor<T> upsample_disparity(const Tensor<T>& small, int scale);

}  // namespace shiftconv
