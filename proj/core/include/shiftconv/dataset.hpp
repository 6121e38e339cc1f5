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

#include <filesystem>
#include <string>
#include <vector>

#include "shiftconv/synth.hpp"

namespace shiftconv {

// On-disk layout: <root>/left/<id>.ppm, <root>/right/<id>.ppm,
// <root>/disp/<id>.pfm and optionally <root>/mask/<id>.pgm (255 = visible in
// both views). Single-channel images use .pgm instead of .ppm.
struct DatasetEntry {
  std::string id;
  StereoSample sample;
};

void write_sample(const std::filesystem::path& root, const std::string& id,
                  const StereoSample& sample);

// Loads every id present in left/, sorted by id. Missing right/disp files or
// mismatched extents raise DataError; codec failures raise ParseError.
std::vector<DatasetEntry> load_dataset(const std::filesystem::path& root);

// Writes `count` synthetic pairs with ids 000000.. and per-pair seeds
// derived from cfg.seed.
void write_synthetic_dataset(const std::filesystem::path& root, const SynthConfig& cfg, int count);

// The synthetic pairs write_synthetic_dataset would produce, in memory.
std::vector<StereoSample> synthetic_samples(const SynthConfig& cfg, int count);

}  // namespace shiftconv
