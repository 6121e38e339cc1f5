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

#include "shiftconv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace shiftconv {

void SynthConfig::validate() const {
  if (width < 1 || height < 1) throw ContractError("SynthConfig: extents must be positive");
  if (channels != 1 && channels != 3) throw ContractError("SynthConfig: channels must be 1 or 3");
  if (num_shapes < 0) throw ContractError("SynthConfig: num_shapes must be >= 0");
  if (disp_min < 0 || disp_min > disp_max || 2 * disp_max >= width) {
    throw ContractError("SynthConfig: need 0 <= disp_min <= disp_max < width/2, got [" +
                        std::to_string(disp_min) + ", " + std::to_string(disp_max) +
                        "] for width " + std::to_string(width));
  }
  if (background_disp < 0 || 2 * background_disp >= width) {
    throw ContractError("SynthConfig: background_disp must be in [0, width/2)");
  }
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finaliser
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double hash_unit(std::uint64_t seed, int layer, int channel, int octave, long u, long v) {
  std::uint64_t h = mix(seed);
  h = mix(h ^ static_cast<std::uint64_t>(layer));
  h = mix(h ^ (static_cast<std::uint64_t>(channel) << 8 | static_cast<std::uint64_t>(octave)));
  h = mix(h ^ static_cast<std::uint64_t>(u));
  h = mix(h ^ static_cast<std::uint64_t>(v));
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

struct Layer {
  int x0, y0, w, h;  // rectangle in left-image coordinates
  int disp;
  int cell;          // coarse texture lattice spacing
  double base[3];
};

// Texture of a layer at object coordinates (u, v): bilinear value noise on a
// coarse lattice plus per-pixel noise.
float texel(std::uint64_t seed, int index, const Layer& L, int c, long u, long v) {
  const long cu = floor_div(u, L.cell);
  const long cv = floor_div(v, L.cell);
  const double fu = static_cast<double>(u - cu * L.cell) / L.cell;
  const double fv = static_cast<double>(v - cv * L.cell) / L.cell;
  const double a = hash_unit(seed, index, c, 0, cu, cv);
  const double b = hash_unit(seed, index, c, 0, cu + 1, cv);
  const double d = hash_unit(seed, index, c, 0, cu, cv + 1);
  const double e = hash_unit(seed, index, c, 0, cu + 1, cv + 1);
  const double smooth = (a * (1 - fu) + b * fu) * (1 - fv) + (d * (1 - fu) + e * fu) * fv;
  const double fine = hash_unit(seed, index, c, 1, u, v);
  const double value = 0.35 * L.base[c] + 0.4 * smooth + 0.25 * fine;
  return static_cast<float>(std::clamp(value, 0.0, 1.0));
}

}  // namespace

StereoSample gen_synthetic_pair(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  auto uniform_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto uniform = [&] { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); };

  const int W = cfg.width;
  const int H = cfg.height;
  std::vector<Layer> layers;
  Layer bg{0, 0, W, H, cfg.background_disp, uniform_int(3, 8), {uniform(), uniform(), uniform()}};
  layers.push_back(bg);
  std::vector<Layer> shapes;
  for (int i = 0; i < cfg.num_shapes; ++i) {
    Layer L{};
    L.w = uniform_int(std::max(2, W / 8), std::max(2, W / 3));
    L.h = uniform_int(std::max(2, H / 8), std::max(2, H / 2));
    L.w = std::min(L.w, W);
    L.h = std::min(L.h, H);
    L.x0 = uniform_int(0, W - L.w);
    L.y0 = uniform_int(0, H - L.h);
    L.disp = uniform_int(cfg.disp_min, cfg.disp_max);
    L.cell = uniform_int(2, 6);
    L.base[0] = uniform();
    L.base[1] = uniform();
    L.base[2] = uniform();
    shapes.push_back(L);
  }
  // Back to front: larger disparity means closer to the camera.
  std::stable_sort(shapes.begin(), shapes.end(),
                   [](const Layer& a, const Layer& b) { return a.disp < b.disp; });
  layers.insert(layers.end(), shapes.begin(), shapes.end());

  // Topmost layer index per pixel in each view.
  std::vector<int> top_left(static_cast<std::size_t>(H) * W, 0);
  std::vector<int> top_right(static_cast<std::size_t>(H) * W, 0);
  for (int k = 1; k < static_cast<int>(layers.size()); ++k) {
    const Layer& L = layers[k];
    for (int y = L.y0; y < L.y0 + L.h; ++y) {
      for (int x = L.x0; x < L.x0 + L.w; ++x) {
        top_left[static_cast<std::size_t>(y) * W + x] = k;
        const int xr = x - L.disp;
        if (xr >= 0) top_right[static_cast<std::size_t>(y) * W + xr] = k;
      }
    }
  }

  const Shape shape{1, cfg.channels, H, W};
  StereoSample s{Tensor<float>(shape), Tensor<float>(shape), DisparityMap(H, W),
                 PixelMask(static_cast<std::size_t>(H) * W, 0)};
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      const Layer& Ll = layers[top_left[i]];
      const Layer& Lr = layers[top_right[i]];
      for (int c = 0; c < cfg.channels; ++c) {
        s.left.at(0, c, y, x) = texel(cfg.seed, top_left[i], Ll, c, x - Ll.x0, y - Ll.y0);
        s.right.at(0, c, y, x) =
            texel(cfg.seed, top_right[i], Lr, c, x + Lr.disp - Lr.x0, y - Lr.y0);
      }
      s.gt_disp.at(y, x) = static_cast<float>(Ll.disp);
      const int xr = x - Ll.disp;
      s.occlusion_mask[i] =
          (xr >= 0 && top_right[static_cast<std::size_t>(y) * W + xr] == top_left[i]) ? 1 : 0;
    }
  }
  return s;
}

double correspondence_violation(const StereoSample& sample) {
  const Shape s = sample.left.shape();
  double worst = 0.0;
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * s.w + x;
      if (!sample.occlusion_mask[i]) continue;
      const long xr = x - std::lround(sample.gt_disp.at(y, x));
      if (xr < 0 || xr >= s.w) return std::numeric_limits<double>::infinity();
      for (int c = 0; c < s.c; ++c) {
        worst = std::max(worst, std::abs(static_cast<double>(sample.left.at(0, c, y, x)) -
                                         sample.right.at(0, c, y, static_cast<int>(xr))));
      }
    }
  }
  return worst;
}

}  // namespace shiftconv
