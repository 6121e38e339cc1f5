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

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shiftconv/tensor.hpp"

namespace shiftconv {

// A tensor that may take part in reverse-mode differentiation. Parameters are
// long-lived leaf nodes; intermediate nodes live as long as the graph that
// produced them (or any caller still holding them).
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until something is accumulated
  bool requires_grad = false;

  bool has_grad() const { return !grad.empty() && grad.shape() == value.shape(); }

  void accumulate(const Tensor<T>& g) {
    if (g.shape() != value.shape()) {
      throw ContractError("accumulate: gradient shape " + g.shape().str() +
                          " does not match value shape " + value.shape().str());
    }
    if (!has_grad()) {
      grad = g;
      return;
    }
    auto dst = grad.data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  // Zero-initialised on first use; backward kernels add into it in place.
  Tensor<T>& grad_buffer() {
    if (!has_grad()) grad = Tensor<T>(value.shape());
    return grad;
  }

  void zero_grad() { grad = Tensor<T>(); }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> make_var(Tensor<T> value, bool requires_grad = false) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}

// Ordered record of differentiable operations. Records are appended in
// execution order, so every input precedes its consumer; backward() replays
// them once each in reverse.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(const Tensor<T>& out_grad)>;

  struct Record {
    std::string op;
    std::vector<Var<T>> inputs;
    Var<T> output;
    BackwardFn backward;
  };

  explicit Graph(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }
  std::size_t size() const { return records_.size(); }
  const std::vector<Record>& records() const { return records_; }
  void clear() { records_.clear(); }

  // Wraps `out` in a node. The backward closure is kept only when recording
  // and at least one input is tracked.
  Var<T> emit(std::string_view op, std::vector<Var<T>> inputs, Tensor<T> out, BackwardFn fn) {
    bool tracked = false;
    for (const auto& in : inputs) {
      if (in && in->requires_grad) tracked = true;
    }
    tracked = tracked && recording_;
    auto node = make_var(std::move(out), tracked);
    if (tracked) {
      records_.push_back(Record{std::string(op), std::move(inputs), node, std::move(fn)});
    }
    return node;
  }

  void backward(const Var<T>& loss) {
    if (!loss || loss->value.numel() != 1) {
      throw ContractError("backward: loss must be a single scalar, got shape " +
                          (loss ? loss->value.shape().str() : std::string("<null>")));
    }
    if (!loss->requires_grad) return;
    loss->accumulate(Tensor<T>(loss->value.shape(), T(1)));
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      const Var<T>& out = it->output;
      if (!out->has_grad()) continue;  // not on the loss path
      it->backward(out->grad);
    }
  }

 private:
  bool recording_;
  std::vector<Record> records_;
};

}  // namespace shiftconv
