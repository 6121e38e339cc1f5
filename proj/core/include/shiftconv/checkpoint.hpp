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
#include <string>
#include <vector>

#include "shiftconv/codecs.hpp"
#include "shiftconv/network.hpp"
#include "shiftconv/optimizer.hpp"

namespace shiftconv {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> value;

  bool operator==(const NamedTensor&) const = default;
};

// Binary layout, all integers little-endian:
//   "SCNC" | u32 version | u64 iteration | u32 stage
//   then until end of file, per tensor:
//   u32 name length | name bytes | u32 n, c, h, w | n*c*h*w f32 values
// Network parameters keep their own names; optimizer moments are stored as
// "adam.m/<param>" and "adam.v/<param>".
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t iteration = 0;
  std::uint32_t stage = 1;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

Bytes serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint checkpoint_load(const std::filesystem::path& path);

Checkpoint make_checkpoint(const Network<float>& net, const Adam& opt, std::uint64_t iteration,
                           std::uint32_t stage);

// Rebuilds network and optimizer state, validating every tensor against cfg.
// Mismatches raise DataError listing each missing or mis-shaped tensor.
struct RestoredState {
  Network<float> net;
  Adam opt;
};
RestoredState restore_checkpoint(const Checkpoint& ckpt, const NetworkConfig& cfg);

}  // namespace shiftconv
