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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "shiftconv/losses.hpp"
#include "test_util.hpp"

namespace shiftconv {
namespace {

using testing::random_tensor;

double smooth_l1_at(double x) {
  Graph<double> g(false);
  auto v = make_var(Tensor<double>(Shape{1, 1, 1, 1}, x));
  return smooth_l1(g, v)->value[0];
}

double smooth_l1_slope(double x) {
  Graph<double> g;
  auto v = make_var(Tensor<double>(Shape{1, 1, 1, 1}, x), true);
  g.backward(smooth_l1(g, v));
  return v->grad[0];
}

double scalar_smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

TEST(SmoothL1, Values) {
  EXPECT_EQ(smooth_l1_at(0.0), 0.0);
  EXPECT_EQ(smooth_l1_at(0.5), 0.125);
  EXPECT_EQ(smooth_l1_at(1.0), 0.5);
  EXPECT_EQ(smooth_l1_at(2.0), 1.5);
  EXPECT_EQ(smooth_l1_at(-2.0), 1.5);
  EXPECT_EQ(smooth_l1_at(-0.5), 0.125);
}

TEST(SmoothL1, ContinuouslyDifferentiableAtOne) {
  const double h = 1e-7;
  for (double s : {1.0, -1.0}) {
    const double left = smooth_l1_at(s - h), right = smooth_l1_at(s + h);
    EXPECT_NEAR(left, smooth_l1_at(s), 1e-6);
    EXPECT_NEAR(right, smooth_l1_at(s), 1e-6);
    const double slope_in = (smooth_l1_at(s - h) - smooth_l1_at(s - 3 * h)) / (2 * h);
    const double slope_out = (smooth_l1_at(s + 3 * h) - smooth_l1_at(s + h)) / (2 * h);
    EXPECT_NEAR(slope_in, slope_out, 1e-6);
    EXPECT_NEAR(smooth_l1_slope(s - h), smooth_l1_slope(s + h), 1e-6);
  }
  EXPECT_EQ(smooth_l1_slope(0.25), 0.25);
  EXPECT_EQ(smooth_l1_slope(3.0), 1.0);
  EXPECT_EQ(smooth_l1_slope(-3.0), -1.0);
}

TEST(Loss1, Examples) {
  const auto target = random_tensor<double>(Shape{1, 1, 4, 6}, 1, 0.0, 10.0);
  std::vector<Var<double>> zero{make_var(Tensor<double>(Shape{2, 1, 3, 3}))};
  const LossConfig cfg;
  {
    Graph<double> g(false);
    EXPECT_EQ(loss1(g, make_var(target), target, zero, cfg)->value[0], 0.0);
  }
  {
    Tensor<double> pred = target;
    for (auto& v : pred.data()) v += 0.5;
    Graph<double> g(false);
    EXPECT_DOUBLE_EQ(loss1(g, make_var(pred), target, zero, cfg)->value[0], 0.125);
  }
}

TEST(Loss1, MatchesScalarOracle) {
  auto target = random_tensor<double>(Shape{2, 1, 5, 7}, 2, 0.0, 6.0);
  target[3] = -1.0;  // invalid pixels are excluded
  target[11] = std::numeric_limits<double>::quiet_NaN();
  const auto pred = random_tensor<double>(target.shape(), 3, 0.0, 6.0);
  const auto w1 = random_tensor<double>(Shape{3, 2, 3, 3}, 4, -1.0, 1.0);
  const auto w2 = random_tensor<double>(Shape{1, 3, 1, 1}, 5, -1.0, 1.0);
  LossConfig cfg{0.01, 0.5, 0.02};

  double sum = 0;
  int count = 0;
  for (std::size_t i = 0; i < target.numel(); ++i) {
    if (!std::isfinite(target[i]) || target[i] < 0) continue;
    sum += scalar_smooth_l1(pred[i] - target[i]);
    ++count;
  }
  double decay = 0;
  for (const auto* w : {&w1, &w2}) {
    for (double v : w->data()) decay += v * v;
  }
  const double expected = sum / count + cfg.alpha1 * decay;

  Graph<double> g(false);
  const double got = loss1(g, make_var(pred), target, {make_var(w1), make_var(w2)}, cfg)->value[0];
  EXPECT_NEAR(got, expected, 1e-12 * std::abs(expected));
}

TEST(Loss1, NoValidPixels) {
  Tensor<double> target(Shape{1, 1, 2, 2}, -1.0);
  Graph<double> g(false);
  EXPECT_THROW(loss1(g, make_var(Tensor<double>(target.shape())), target, {}, LossConfig{}),
               ContractError);
  EXPECT_THROW(loss1(g, make_var(Tensor<double>(Shape{1, 1, 2, 3})), target, {}, LossConfig{}),
               ContractError);
}

TEST(Loss2, Examples) {
  const auto t = random_tensor<double>(Shape{1, 1, 8, 8}, 6, 0.0, 10.0);
  const auto ts = random_tensor<double>(Shape{1, 1, 2, 2}, 7, 0.0, 3.0);
  std::vector<Var<double>> zero{make_var(Tensor<double>(Shape{1, 1, 3, 3}))};
  const LossConfig cfg{1e-4, 0.5, 1e-4};
  {
    Graph<double> g(false);
    EXPECT_EQ(loss2(g, make_var(t), t, make_var(ts), ts, zero, cfg)->value[0], 0.0);
  }
  {
    Tensor<double> off = ts;
    for (auto& v : off.data()) v += 1.0;
    Graph<double> g(false);
    EXPECT_DOUBLE_EQ(loss2(g, make_var(t), t, make_var(off), ts, zero, cfg)->value[0], 0.5);
  }
}

TEST(Loss2, MatchesScalarOracle) {
  const auto t = random_tensor<double>(Shape{1, 1, 8, 12}, 8, 0.0, 10.0);
  const auto pf = random_tensor<double>(t.shape(), 9, 0.0, 10.0);
  auto ts = random_tensor<double>(Shape{1, 1, 2, 3}, 10, 0.0, 3.0);
  ts[4] = -2.0;
  const auto ps = random_tensor<double>(ts.shape(), 11, 0.0, 3.0);
  const auto w = random_tensor<double>(Shape{4, 4, 3, 3}, 12, -0.5, 0.5);
  const LossConfig cfg{0.3, 0.7, 0.05};

  double fine = 0;
  for (std::size_t i = 0; i < t.numel(); ++i) fine += scalar_smooth_l1(pf[i] - t[i]);
  fine /= static_cast<double>(t.numel());
  double small = 0;
  int n = 0;
  for (std::size_t i = 0; i < ts.numel(); ++i) {
    if (ts[i] < 0) continue;
    small += std::abs(ps[i] - ts[i]);
    ++n;
  }
  small /= n;
  double decay = 0;
  for (double v : w.data()) decay += v * v;
  const double expected = fine + cfg.alpha2 * small + cfg.beta2 * decay;

  Graph<double> g(false);
  const double got = loss2(g, make_var(pf), t, make_var(ps), ts, {make_var(w)}, cfg)->value[0];
  EXPECT_NEAR(got, expected, 1e-12 * std::abs(expected));
}

TEST(Loss2, ShapeMismatch) {
  const Tensor<double> t(Shape{1, 1, 4, 4}, 1.0), ts(Shape{1, 1, 2, 2}, 1.0);
  Graph<double> g(false);
  EXPECT_THROW(loss2(g, make_var(Tensor<double>(Shape{1, 1, 4, 5})), t, make_var(ts), ts, {}, LossConfig{}),
               ContractError);
  EXPECT_THROW(loss2(g, make_var(t), t, make_var(Tensor<double>(Shape{1, 1, 2, 3})), ts, {}, LossConfig{}),
               ContractError);
}

TEST(LossConfig, RejectsNegativeCoefficients) {
  EXPECT_NO_THROW(LossConfig{}.validate());
  EXPECT_THROW((LossConfig{-1e-4, 0.5, 1e-4}.validate()), ContractError);
  EXPECT_THROW((LossConfig{1e-4, 0.5, -1.0}.validate()), ContractError);
}

DisparityMap row(std::vector<float> v) {
  const int n = static_cast<int>(v.size());
  return DisparityMap(1, n, std::move(v));
}

TEST(Metrics, EndPointError) {
  const auto gt = row({3, 4, 5, 6});
  EXPECT_EQ(epe(gt, gt), 0.0);
  EXPECT_EQ(epe(row({4, 5, 6, 7}), gt), 1.0);
  EXPECT_EQ(epe(row({3, 5, 3, 11}), gt), 2.0);  // errors {0, 1, 2, 5}
  EXPECT_EQ(epe(row({3, 5, 3, 11}), gt, PixelMask{0, 1, 0, 0}), 1.0);
}

TEST(Metrics, D1Rate) {
  const auto gt = row({3, 4, 5, 6});
  EXPECT_EQ(d1_rate(gt, gt), 0.0);
  EXPECT_EQ(d1_rate(row({13, 14, 15, 16}), gt), 1.0);
  EXPECT_EQ(d1_rate(row({3, 6, 9, 1}), gt), 0.5);  // errors {0, 2, 4, 5}
  EXPECT_EQ(d1_rate(row({6, 4, 5, 6}), gt), 0.0);   // exactly 3 is not an outlier
}

TEST(Metrics, EmptyMaskAndShapeErrors) {
  const auto gt = row({1, 2});
  EXPECT_THROW(epe(gt, gt, PixelMask{0, 0}), ContractError);
  EXPECT_THROW(d1_rate(gt, gt, PixelMask{0, 0}), ContractError);
  EXPECT_THROW(epe(row({1, 2, 3}), gt), ContractError);
  EXPECT_THROW(epe(gt, row({-1, -1})), ContractError);
}

TEST(Metrics, InvalidGroundTruthIsSkipped) {
  const auto gt = row({1, std::numeric_limits<float>::infinity(), -1, 2});
  EXPECT_EQ(epe(row({2, 100, 100, 3}), gt), 1.0);
  EXPECT_EQ(d1_rate(row({9, 100, 100, 2}), gt), 0.5);
}

TEST(Metrics, Invariances) {
  const auto gt = random_tensor<double>(Shape{1, 1, 6, 9}, 13, 0.0, 20.0);
  const auto pred = random_tensor<double>(Shape{1, 1, 6, 9}, 14, 0.0, 20.0);
  auto g = DisparityMap::from_tensor(gt), p = DisparityMap::from_tensor(pred);
  auto g2 = g, p2 = p;
  for (auto& v : g2.values()) v += 4.0f;
  for (auto& v : p2.values()) v += 4.0f;
  EXPECT_NEAR(epe(p2, g2), epe(p, g), 1e-5);

  // Growing any single error never lowers the D1 rate.
  double last = d1_rate(p, g);
  for (int i = 0; i < 54; ++i) {
    p.values()[i] = g.values()[i] + 10.0f + static_cast<float>(i);
    const double now = d1_rate(p, g);
    EXPECT_GE(now, last);
    last = now;
  }
  EXPECT_EQ(last, 1.0);
}

}  // namespace
}  // namespace shiftconv
