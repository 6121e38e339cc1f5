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

#include <benchmark/benchmark.h>

#include <random>

#include "shiftconv/losses.hpp"
#include "shiftconv/matching.hpp"
#include "shiftconv/network.hpp"
#include "shiftconv/ops.hpp"

namespace shiftconv {
namespace {

Tensor<float> random_tensor(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  Tensor<float> t(s);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

// Args: channels in/out, extent.
void BM_Conv2d(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  const auto x = make_var(random_tensor(Shape{1, c, n, 2 * n}, 1));
  const auto w = make_var(random_tensor(Shape{c, c, 3, 3}, 2));
  const auto b = make_var(random_tensor(Shape{1, c, 1, 1}, 3));
  for (auto _ : state) {
    Graph<float> g(false);
    benchmark::DoNotOptimize(ops::conv2d(g, x, w, b, 1, 1)->value.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * c * c * 9);
}
BENCHMARK(BM_Conv2d)->Args({16, 32})->Args({32, 64})->Args({64, 32})->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const auto x = make_var(random_tensor(Shape{1, c, 32, 64}, 1), true);
  const auto w = make_var(random_tensor(Shape{c, c, 3, 3}, 2), true);
  const auto b = make_var(random_tensor(Shape{1, c, 1, 1}, 3), true);
  for (auto _ : state) {
    Graph<float> g;
    auto y = ops::conv2d(g, x, w, b, 1, 1);
    g.backward(ops::sum(g, y));
    x->zero_grad();
    w->zero_grad();
    b->zero_grad();
  }
}
BENCHMARK(BM_Conv2dBackward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

// Args: variant (0 per-scale, 1 concat-all), clue filters.
void BM_ShiftConvLayer(benchmark::State& state) {
  ShiftConvConfig cfg;
  cfg.maxdisp = 8;
  cfg.variant = state.range(0) == 0 ? ShiftConvVariant::ConvPerScaleThenConcat
                                    : ShiftConvVariant::ConcatAllThenConv;
  cfg.clue_filters = static_cast<int>(state.range(1));
  const int c = 32;
  const auto l = make_var(random_tensor(Shape{1, c, 16, 32}, 4));
  const auto r = make_var(random_tensor(Shape{1, c, 16, 32}, 5));
  const auto w = make_var(random_tensor(cfg.weight_shape(c), 6));
  const auto b = make_var(random_tensor(cfg.bias_shape(), 7));
  for (auto _ : state) {
    Graph<float> g(false);
    benchmark::DoNotOptimize(shift_conv_layer(g, l, r, cfg, w, b)->value.data().data());
  }
}
BENCHMARK(BM_ShiftConvLayer)
    ->ArgsProduct({{0, 1}, {8, 12, 16}})
    ->ArgNames({"concat_all", "filters"})
    ->Unit(benchmark::kMillisecond);

void BM_Correlation(benchmark::State& state) {
  const int c = 32;
  const auto l = make_var(random_tensor(Shape{1, c, 16, 32}, 8));
  const auto r = make_var(random_tensor(Shape{1, c, 16, 32}, 9));
  for (auto _ : state) {
    Graph<float> g(false);
    benchmark::DoNotOptimize(correlation_1d(g, l, r, static_cast<int>(state.range(0)))->value.data().data());
  }
}
BENCHMARK(BM_Correlation)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);

// Args: height (width is twice that).
void BM_NetworkForward(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  Network<float> net(NetworkConfig::desk(), 1);
  const auto left = random_tensor(Shape{1, 3, h, 2 * h}, 10);
  const auto right = random_tensor(Shape{1, 3, h, 2 * h}, 11);
  for (auto _ : state) {
    Graph<float> g(false);
    benchmark::DoNotOptimize(net.forward(g, left, right).coarse->value.data().data());
  }
}
BENCHMARK(BM_NetworkForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  Network<float> net(NetworkConfig::desk(), 1);
  const auto left = random_tensor(Shape{1, 3, 64, 128}, 12);
  const auto right = random_tensor(Shape{1, 3, 64, 128}, 13);
  const Tensor<float> target(Shape{1, 1, 64, 128}, 4.0f);
  const auto decayed = net.params().decayed();
  for (auto _ : state) {
    Graph<float> g;
    const auto out = net.forward(g, left, right);
    g.backward(loss1(g, out.coarse, target, decayed, LossConfig{}));
    net.params().zero_grad();
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace shiftconv

BENCHMARK_MAIN();
