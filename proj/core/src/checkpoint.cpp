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

#include "shiftconv/checkpoint.hpp"

#include <bit>
#include <cstring>

namespace shiftconv {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'N', 'C'};
const std::string kFirstMoment = "adam.m/";
const std::string kSecondMoment = "adam.v/";

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const std::string& what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }

  std::string text(std::size_t len, const std::string& what) {
    need(len, what);
    std::string s(bytes_.begin() + pos_, bytes_.begin() + pos_ + len);
    pos_ += len;
    return s;
  }

  void need(std::size_t n, const std::string& what) {
    if (remaining() < n) {
      throw ParseError("checkpoint truncated while reading " + what, bytes_.size());
    }
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

Bytes serialize_checkpoint(const Checkpoint& ckpt) {
  Bytes out(kMagic, kMagic + 4);
  put_u32(out, ckpt.version);
  put_u64(out, ckpt.iteration);
  put_u32(out, ckpt.stage);
  for (const auto& t : ckpt.tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    const Shape s = t.value.shape();
    for (int e : {s.n, s.c, s.h, s.w}) put_u32(out, static_cast<std::uint32_t>(e));
    for (float v : t.value.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  if (in.text(std::min<std::size_t>(4, bytes.size()), "magic") != std::string(kMagic, 4)) {
    throw ParseError("bad checkpoint magic (expected SCNC)", 0);
  }
  Checkpoint ckpt;
  const std::size_t version_at = in.offset();
  ckpt.version = in.u32("version");
  if (ckpt.version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(ckpt.version) +
                         " (expected " + std::to_string(kCheckpointVersion) + ")",
                     version_at);
  }
  ckpt.iteration = in.u64("iteration");
  ckpt.stage = in.u32("stage tag");
  while (!in.at_end()) {
    const std::string index = "tensor #" + std::to_string(ckpt.tensors.size());
    const std::uint32_t len = in.u32(index + " name length");
    NamedTensor t;
    t.name = in.text(len, index + " name");
    Shape s;
    s.n = static_cast<int>(in.u32("extents of tensor '" + t.name + "'"));
    s.c = static_cast<int>(in.u32("extents of tensor '" + t.name + "'"));
    s.h = static_cast<int>(in.u32("extents of tensor '" + t.name + "'"));
    s.w = static_cast<int>(in.u32("extents of tensor '" + t.name + "'"));
    in.need(s.numel() * 4, "values of tensor '" + t.name + "' " + s.str());
    std::vector<float> values(s.numel());
    for (auto& v : values) v = std::bit_cast<float>(in.u32("values of tensor '" + t.name + "'"));
    t.value = Tensor<float>(s, std::move(values));
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

Checkpoint make_checkpoint(const Network<float>& net, const Adam& opt, std::uint64_t iteration,
                           std::uint32_t stage) {
  Checkpoint ckpt;
  ckpt.iteration = iteration;
  ckpt.stage = stage;
  const auto& entries = net.params().entries();
  for (const auto& e : entries) ckpt.tensors.push_back({e.name, e.var->value});
  const auto& m = opt.first_moments();
  const auto& v = opt.second_moments();
  for (std::size_t k = 0; k < entries.size() && k < m.size(); ++k) {
    ckpt.tensors.push_back({kFirstMoment + entries[k].name, m[k]});
  }
  for (std::size_t k = 0; k < entries.size() && k < v.size(); ++k) {
    ckpt.tensors.push_back({kSecondMoment + entries[k].name, v[k]});
  }
  return ckpt;
}

RestoredState restore_checkpoint(const Checkpoint& ckpt, const NetworkConfig& cfg) {
  ParameterStore<float> params;
  for (const auto& t : ckpt.tensors) {
    if (t.name.rfind("adam.", 0) == 0) continue;
    params.add(t.name, t.value, true);
  }
  Network<float> net(cfg, std::move(params));  // validates names and shapes

  Adam opt(net.params());
  std::string problems;
  const auto& entries = net.params().entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Shape want = entries[k].var->value.shape();
    for (auto [prefix, dst] : {std::pair{&kFirstMoment, &opt.first_moments()[k]},
                               std::pair{&kSecondMoment, &opt.second_moments()[k]}}) {
      const NamedTensor* t = ckpt.find(*prefix + entries[k].name);
      if (!t) {
        problems += "\n  missing tensor " + *prefix + entries[k].name;
      } else if (t->value.shape() != want) {
        problems += "\n  tensor " + t->name + " has shape " + t->value.shape().str() +
                    ", expected " + want.str();
      } else {
        *dst = t->value;
      }
    }
  }
  if (!problems.empty()) throw DataError("checkpoint optimizer state is inconsistent:" + problems);
  opt.set_steps(ckpt.iteration);
  return {std::move(net), std::move(opt)};
}

}  // namespace shiftconv
