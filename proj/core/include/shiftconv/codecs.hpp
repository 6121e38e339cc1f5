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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "shiftconv/tensor.hpp"

namespace shiftconv {

using Bytes = std::vector<std::uint8_t>;

// PFM: "Pf" (1 channel) or "PF" (3 channels, interleaved), width, height, then
// a scale whose sign gives the byte order (negative = little-endian). Rows are
// stored bottom to top. A |scale| other than 1 multiplies the decoded values.
Tensor<float> read_pfm(std::span<const std::uint8_t> bytes);
// Canonical little-endian output with header "P?\n<w> <h>\n-1\n".
// The tensor must be (1, 1, H, W) or (1, 3, H, W).
Bytes write_pfm(const Tensor<float>& image);

// Binary PGM (P5) / PPM (P6), maxval up to 65535 (16-bit samples are
// big-endian). Decoded values are sample / maxval.
Tensor<float> read_pnm(std::span<const std::uint8_t> bytes);
// Values are clamped to [0, 1] and rounded to the nearest level.
Bytes write_pnm(const Tensor<float>& image, int maxval = 255);

// Greyscale export of a disparity map: [0, disp_cap] maps linearly onto
// [0, 255], values outside are clamped.
Bytes disparity_to_pgm(const DisparityMap& disp, double disp_cap);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace shiftconv
