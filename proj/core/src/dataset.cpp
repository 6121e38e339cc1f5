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

#include "shiftconv/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "shiftconv/codecs.hpp"

namespace fs = std::filesystem;

namespace shiftconv {

namespace {

const char* image_ext(int channels) { return channels == 1 ? ".pgm" : ".ppm"; }

fs::path find_image(const fs::path& dir, const std::string& id) {
  for (const char* ext : {".ppm", ".pgm"}) {
    fs::path p = dir / (id + ext);
    if (fs::exists(p)) return p;
  }
  throw DataError("missing image " + (dir / id).string() + ".(ppm|pgm)");
}

}  // namespace

void write_sample(const fs::path& root, const std::string& id, const StereoSample& sample) {
  const int c = sample.left.shape().c;
  write_file(root / "left" / (id + image_ext(c)), write_pnm(sample.left));
  write_file(root / "right" / (id + image_ext(c)), write_pnm(sample.right));
  write_file(root / "disp" / (id + ".pfm"), write_pfm(sample.gt_disp.to_tensor<float>()));
  if (!sample.occlusion_mask.empty()) {
    Tensor<float> mask(Shape{1, 1, sample.gt_disp.height(), sample.gt_disp.width()});
    for (std::size_t i = 0; i < mask.numel(); ++i) mask[i] = sample.occlusion_mask[i] ? 1.0f : 0.0f;
    write_file(root / "mask" / (id + ".pgm"), write_pnm(mask));
  }
}

std::vector<DatasetEntry> load_dataset(const fs::path& root) {
  const fs::path left_dir = root / "left";
  if (!fs::is_directory(left_dir)) throw DataError("dataset has no left/ directory: " + root.string());
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(left_dir)) {
    const auto ext = e.path().extension();
    if (ext == ".ppm" || ext == ".pgm") ids.push_back(e.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw DataError("dataset is empty: " + root.string());

  std::vector<DatasetEntry> out;
  for (const auto& id : ids) {
    StereoSample s;
    s.left = read_pnm(read_file(find_image(left_dir, id)));
    s.right = read_pnm(read_file(find_image(root / "right", id)));
    const fs::path disp_path = root / "disp" / (id + ".pfm");
    if (!fs::exists(disp_path)) throw DataError("missing disparity " + disp_path.string());
    s.gt_disp = DisparityMap::from_tensor(read_pfm(read_file(disp_path)));
    if (s.left.shape() != s.right.shape() || s.gt_disp.height() != s.left.shape().h ||
        s.gt_disp.width() != s.left.shape().w) {
      throw DataError("sample " + id + ": left/right/disp extents differ");
    }
    const fs::path mask_path = root / "mask" / (id + ".pgm");
    const std::size_t pixels = static_cast<std::size_t>(s.gt_disp.height()) * s.gt_disp.width();
    if (fs::exists(mask_path)) {
      const auto m = read_pnm(read_file(mask_path));
      if (m.numel() != pixels) throw DataError("sample " + id + ": mask extents differ");
      s.occlusion_mask.resize(pixels);
      for (std::size_t i = 0; i < pixels; ++i) s.occlusion_mask[i] = m[i] > 0.5f ? 1 : 0;
    } else {
      s.occlusion_mask.assign(pixels, 1);
    }
    out.push_back({id, std::move(s)});
  }
  return out;
}

std::vector<StereoSample> synthetic_samples(const SynthConfig& cfg, int count) {
  std::vector<StereoSample> out;
  out.reserve(std::max(count, 0));
  for (int i = 0; i < count; ++i) {
    SynthConfig c = cfg;
    c.seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(i);
    out.push_back(gen_synthetic_pair(c));
  }
  return out;
}

void write_synthetic_dataset(const fs::path& root, const SynthConfig& cfg, int count) {
  const auto samples = synthetic_samples(cfg, count);
  for (int i = 0; i < count; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "%06d", i);
    write_sample(root, id, samples[i]);
  }
}

}  // namespace shiftconv
