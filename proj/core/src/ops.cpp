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

#include "shiftconv/ops.hpp"

#include <atomic>
#include <cstdint>
#include <string>

#include "kernels.hpp"

namespace shiftconv {
namespace detail {

namespace {
std::atomic<int> g_threads{1};
}

int thread_count() { return g_threads.load(); }

}  // namespace detail

namespace ops {

using detail::ConstMatMap;
using detail::ConvGeometry;
using detail::MatMap;
using detail::RowMat;

void set_num_threads(int threads) { detail::g_threads = threads < 1 ? 1 : threads; }
int num_threads() { return detail::thread_count(); }

namespace {

[[noreturn]] void fail(const std::string& op, const std::string& msg) {
  throw ContractError(op + ": " + msg);
}

void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a != b) fail(op, "shape mismatch " + a.str() + " vs " + b.str());
}

template <typename T>
void check_bias(const char* op, const Var<T>& bias, int channels) {
  if (!bias) return;
  const Shape want{1, channels, 1, 1};
  if (bias->value.shape() != want) {
    fail(op, "bias shape " + bias->value.shape().str() + " expected " + want.str());
  }
}

template <typename T>
bool tracked(const Var<T>& v) {
  return v && v->requires_grad;
}

// Sums per-sample partial gradients in sample order so the result does not
// depend on how samples were distributed over threads.
template <typename T>
void reduce_into(Node<T>& node, const std::vector<std::vector<T>>& parts) {
  auto dst = node.grad_buffer().data();
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += p[i];
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(Graph<T>& g, const Var<T>& input, const Var<T>& weight, const Var<T>& bias,
              int stride, int padding) {
  const Shape xs = input->value.shape();
  const Shape ws = weight->value.shape();
  if (ws.c != xs.c) {
    fail("conv2d", "input channels " + std::to_string(xs.c) + " != weight in_channels " +
                       std::to_string(ws.c));
  }
  if (ws.h % 2 == 0 || ws.w % 2 == 0) {
    fail("conv2d", "kernel height/width must be odd, got " + std::to_string(ws.h) + "x" +
                       std::to_string(ws.w));
  }
  if (stride < 1) fail("conv2d", "stride must be positive");
  if (padding < 0) fail("conv2d", "padding must be non-negative");
  const int oh_num = xs.h + 2 * padding - ws.h;
  const int ow_num = xs.w + 2 * padding - ws.w;
  if (oh_num < 0) fail("conv2d", "output height is not positive");
  if (ow_num < 0) fail("conv2d", "output width is not positive");
  check_bias("conv2d", bias, ws.n);

  const ConvGeometry geo{xs.c, xs.h, xs.w, ws.h, ws.w, stride, padding,
                         oh_num / stride + 1, ow_num / stride + 1};
  const int out_c = ws.n;
  const int k = geo.rows();
  const int p = geo.cols();
  Tensor<T> out(Shape{xs.n, out_c, geo.out_h, geo.out_w});

  const T* xdata = input->value.raw();
  const T* wdata = weight->value.raw();
  const std::size_t in_stride = static_cast<std::size_t>(xs.c) * xs.h * xs.w;
  const std::size_t out_stride = static_cast<std::size_t>(out_c) * p;
  detail::parallel_for(xs.n, [&](int n) {
    std::vector<T> col(static_cast<std::size_t>(k) * p);
    detail::im2col(xdata + n * in_stride, geo, col.data());
    MatMap<T> o(out.raw() + n * out_stride, out_c, p);
    o.noalias() = ConstMatMap<T>(wdata, out_c, k) * ConstMatMap<T>(col.data(), k, p);
    if (bias) {
      for (int c = 0; c < out_c; ++c) o.row(c).array() += bias->value[c];
    }
  });

  return g.emit("conv2d", {input, weight, bias}, std::move(out),
                [=](const Tensor<T>& gout) {
                  const int batch = xs.n;
                  std::vector<std::vector<T>> dw(tracked(weight) ? batch : 0);
                  std::vector<std::vector<T>> db(tracked(bias) ? batch : 0);
                  Tensor<T>* dx = tracked(input) ? &input->grad_buffer() : nullptr;
                  const T* wd = weight->value.raw();
                  detail::parallel_for(batch, [&](int n) {
                    ConstMatMap<T> go(gout.raw() + n * out_stride, out_c, p);
                    std::vector<T> col(static_cast<std::size_t>(k) * p);
                    if (tracked(weight)) {
                      detail::im2col(input->value.raw() + n * in_stride, geo, col.data());
                      dw[n].resize(static_cast<std::size_t>(out_c) * k);
                      MatMap<T>(dw[n].data(), out_c, k).noalias() =
                          go * ConstMatMap<T>(col.data(), k, p).transpose();
                    }
                    if (tracked(bias)) {
                      db[n].resize(out_c);
                      for (int c = 0; c < out_c; ++c) db[n][c] = go.row(c).sum();
                    }
                    if (dx) {
                      MatMap<T>(col.data(), k, p).noalias() =
                          ConstMatMap<T>(wd, out_c, k).transpose() * go;
                      detail::col2im(col.data(), geo, dx->raw() + n * in_stride);
                    }
                  });
                  if (tracked(weight)) reduce_into(*weight, dw);
                  if (tracked(bias)) reduce_into(*bias, db);
                });
}

template <typename T>
Var<T> transposed_conv2d(Graph<T>& g, const Var<T>& input, const Var<T>& weight,
                         const Var<T>& bias, int stride, int padding) {
  const Shape xs = input->value.shape();
  const Shape ws = weight->value.shape();
  if (ws.n != xs.c) {
    fail("transposed_conv2d", "input channels " + std::to_string(xs.c) +
                                  " != weight in_channels " + std::to_string(ws.n));
  }
  if (xs.h < 1 || xs.w < 1) fail("transposed_conv2d", "input spatial extents must be >= 1");
  if (stride < 1) fail("transposed_conv2d", "stride must be positive");
  const int oh = (xs.h - 1) * stride - 2 * padding + ws.h;
  const int ow = (xs.w - 1) * stride - 2 * padding + ws.w;
  if (oh < 1 || ow < 1) fail("transposed_conv2d", "output extent is not positive");
  const int out_c = ws.c;
  check_bias("transposed_conv2d", bias, out_c);

  // The output plays the role of the image of a conv2d that produces `input`.
  const ConvGeometry geo{out_c, oh, ow, ws.h, ws.w, stride, padding, xs.h, xs.w};
  const int k = geo.rows();
  const int p = geo.cols();
  const int in_c = xs.c;
  Tensor<T> out(Shape{xs.n, out_c, oh, ow});

  const std::size_t in_stride = static_cast<std::size_t>(in_c) * p;
  const std::size_t out_stride = static_cast<std::size_t>(out_c) * oh * ow;
  detail::parallel_for(xs.n, [&](int n) {
    std::vector<T> col(static_cast<std::size_t>(k) * p);
    MatMap<T>(col.data(), k, p).noalias() =
        ConstMatMap<T>(weight->value.raw(), in_c, k).transpose() *
        ConstMatMap<T>(input->value.raw() + n * in_stride, in_c, p);
    T* o = out.raw() + n * out_stride;
    detail::col2im(col.data(), geo, o);
    if (bias) {
      for (int c = 0; c < out_c; ++c) {
        T* plane = o + static_cast<std::size_t>(c) * oh * ow;
        for (int i = 0; i < oh * ow; ++i) plane[i] += bias->value[c];
      }
    }
  });

  return g.emit("transposed_conv2d", {input, weight, bias}, std::move(out),
                [=](const Tensor<T>& gout) {
                  const int batch = xs.n;
                  std::vector<std::vector<T>> dw(tracked(weight) ? batch : 0);
                  std::vector<std::vector<T>> db(tracked(bias) ? batch : 0);
                  Tensor<T>* dx = tracked(input) ? &input->grad_buffer() : nullptr;
                  detail::parallel_for(batch, [&](int n) {
                    std::vector<T> col(static_cast<std::size_t>(k) * p);
                    const T* go = gout.raw() + n * out_stride;
                    detail::im2col(go, geo, col.data());
                    ConstMatMap<T> gcol(col.data(), k, p);
                    if (tracked(weight)) {
                      dw[n].resize(static_cast<std::size_t>(in_c) * k);
                      MatMap<T>(dw[n].data(), in_c, k).noalias() =
                          ConstMatMap<T>(input->value.raw() + n * in_stride, in_c, p) *
                          gcol.transpose();
                    }
                    if (dx) {
                      MatMap<T>(dx->raw() + n * in_stride, in_c, p).noalias() +=
                          ConstMatMap<T>(weight->value.raw(), in_c, k) * gcol;
                    }
                    if (tracked(bias)) {
                      db[n].assign(out_c, T(0));
                      for (int c = 0; c < out_c; ++c) {
                        const T* plane = go + static_cast<std::size_t>(c) * oh * ow;
                        T s = 0;
                        for (int i = 0; i < oh * ow; ++i) s += plane[i];
                        db[n][c] = s;
                      }
                    }
                  });
                  if (tracked(weight)) reduce_into(*weight, dw);
                  if (tracked(bias)) reduce_into(*bias, db);
                });
}

template <typename T>
Var<T> maxpool2d(Graph<T>& g, const Var<T>& input) {
  const Shape xs = input->value.shape();
  if (xs.h % 2 != 0) fail("maxpool2d", "height " + std::to_string(xs.h) + " is odd");
  if (xs.w % 2 != 0) fail("maxpool2d", "width " + std::to_string(xs.w) + " is odd");
  const Shape os{xs.n, xs.c, xs.h / 2, xs.w / 2};
  Tensor<T> out(os);
  std::vector<std::uint32_t> argmax(os.numel());
  const Tensor<T>& x = input->value;
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      for (int y = 0; y < os.h; ++y) {
        for (int xo = 0; xo < os.w; ++xo) {
          std::size_t best = x.index(n, c, 2 * y, 2 * xo);
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t i = x.index(n, c, 2 * y + dy, 2 * xo + dx);
              if (x[i] > x[best]) best = i;
            }
          }
          const std::size_t o = out.index(n, c, y, xo);
          out[o] = x[best];
          argmax[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return g.emit("maxpool2d", {input}, std::move(out),
                [input, argmax = std::move(argmax)](const Tensor<T>& gout) {
                  auto& gx = input->grad_buffer();
                  for (std::size_t o = 0; o < argmax.size(); ++o) gx[argmax[o]] += gout[o];
                });
}

template <typename T>
Var<T> leaky_relu(Graph<T>& g, const Var<T>& input, T slope) {
  Tensor<T> out = input->value;
  for (auto& v : out.data()) v = v >= T(0) ? v : slope * v;
  return g.emit("leaky_relu", {input}, std::move(out), [input, slope](const Tensor<T>& gout) {
    auto& gx = input->grad_buffer();
    const auto& x = input->value;
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += x[i] >= T(0) ? gout[i] : slope * gout[i];
  });
}

template <typename T>
Var<T> concat_channels(Graph<T>& g, const std::vector<Var<T>>& inputs) {
  if (inputs.empty()) fail("concat_channels", "no inputs");
  Shape os = inputs.front()->value.shape();
  os.c = 0;
  for (const auto& in : inputs) {
    const Shape& s = in->value.shape();
    if (s.n != os.n || s.h != os.h || s.w != os.w) {
      fail("concat_channels", "input " + s.str() + " does not share N,H,W with " +
                                  inputs.front()->value.shape().str());
    }
    os.c += s.c;
  }
  Tensor<T> out(os);
  const std::size_t plane = os.plane();
  for (int n = 0; n < os.n; ++n) {
    T* dst = out.plane(n, 0);
    for (const auto& in : inputs) {
      const std::size_t len = in->value.shape().c * plane;
      const T* src = in->value.plane(n, 0);
      std::copy(src, src + len, dst);
      dst += len;
    }
  }
  return g.emit("concat_channels", inputs, std::move(out), [inputs, os](const Tensor<T>& gout) {
    const std::size_t plane = os.plane();
    for (int n = 0; n < os.n; ++n) {
      const T* src = gout.plane(n, 0);
      for (const auto& in : inputs) {
        const std::size_t len = in->value.shape().c * plane;
        if (in->requires_grad) {
          T* dst = in->grad_buffer().plane(n, 0);
          for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
        }
        src += len;
      }
    }
  });
}

template <typename T>
Var<T> slice_channels(Graph<T>& g, const Var<T>& input, int first, int count) {
  const Shape xs = input->value.shape();
  if (first < 0 || count < 0 || first + count > xs.c) {
    fail("slice_channels", "channel range [" + std::to_string(first) + ", " +
                               std::to_string(first + count) + ") outside " + xs.str());
  }
  Shape os = xs;
  os.c = count;
  Tensor<T> out(os);
  const std::size_t len = count * xs.plane();
  for (int n = 0; n < xs.n; ++n) {
    const T* src = input->value.plane(n, first);
    std::copy(src, src + len, out.plane(n, 0));
  }
  return g.emit("slice_channels", {input}, std::move(out),
                [input, first, len, xs](const Tensor<T>& gout) {
                  auto& gx = input->grad_buffer();
                  for (int n = 0; n < xs.n; ++n) {
                    T* dst = gx.plane(n, first);
                    const T* src = gout.plane(n, 0);
                    for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
                  }
                });
}

template <typename T>
Var<T> hslice_pad(Graph<T>& g, const Var<T>& input, int displacement) {
  const Shape xs = input->value.shape();
  const int d = displacement;
  if (d >= xs.w || -d >= xs.w) {
    fail("hslice_pad", "|displacement| " + std::to_string(d) + " must be < width " +
                           std::to_string(xs.w));
  }
  // Valid output columns [lo, hi) read input column x + d.
  const int lo = d < 0 ? -d : 0;
  const int hi = d > 0 ? xs.w - d : xs.w;
  Tensor<T> out(xs);
  const int rows = xs.n * xs.c * xs.h;
  for (int r = 0; r < rows; ++r) {
    const T* src = input->value.raw() + static_cast<std::size_t>(r) * xs.w;
    T* dst = out.raw() + static_cast<std::size_t>(r) * xs.w;
    for (int x = lo; x < hi; ++x) dst[x] = src[x + d];
  }
  return g.emit("hslice_pad", {input}, std::move(out),
                [input, d, lo, hi, rows, xs](const Tensor<T>& gout) {
                  auto& gx = input->grad_buffer();
                  for (int r = 0; r < rows; ++r) {
                    T* dst = gx.raw() + static_cast<std::size_t>(r) * xs.w;
                    const T* src = gout.raw() + static_cast<std::size_t>(r) * xs.w;
                    for (int x = lo; x < hi; ++x) dst[x + d] += src[x];
                  }
                });
}

template <typename T>
Var<T> add(Graph<T>& g, const Var<T>& a, const Var<T>& b) {
  require_same_shape("add", a->value.shape(), b->value.shape());
  Tensor<T> out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b->value[i];
  return g.emit("add", {a, b}, std::move(out), [a, b](const Tensor<T>& gout) {
    if (a->requires_grad) a->accumulate(gout);
    if (b->requires_grad) b->accumulate(gout);
  });
}

template <typename T>
Var<T> sub(Graph<T>& g, const Var<T>& a, const Var<T>& b) {
  require_same_shape("sub", a->value.shape(), b->value.shape());
  Tensor<T> out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b->value[i];
  return g.emit("sub", {a, b}, std::move(out), [a, b](const Tensor<T>& gout) {
    if (a->requires_grad) a->accumulate(gout);
    if (b->requires_grad) {
      auto& gb = b->grad_buffer();
      for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] -= gout[i];
    }
  });
}

template <typename T>
Var<T> mul(Graph<T>& g, const Var<T>& a, const Var<T>& b) {
  require_same_shape("mul", a->value.shape(), b->value.shape());
  Tensor<T> out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b->value[i];
  return g.emit("mul", {a, b}, std::move(out), [a, b](const Tensor<T>& gout) {
    if (a->requires_grad) {
      auto& ga = a->grad_buffer();
      for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += gout[i] * b->value[i];
    }
    if (b->requires_grad) {
      auto& gb = b->grad_buffer();
      for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] += gout[i] * a->value[i];
    }
  });
}

template <typename T>
Var<T> scale(Graph<T>& g, const Var<T>& a, T factor) {
  Tensor<T> out = a->value;
  for (auto& v : out.data()) v *= factor;
  return g.emit("scale", {a}, std::move(out), [a, factor](const Tensor<T>& gout) {
    auto& ga = a->grad_buffer();
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += factor * gout[i];
  });
}

template <typename T>
Var<T> sum(Graph<T>& g, const Var<T>& a) {
  T s = 0;
  for (T v : a->value.data()) s += v;
  return g.emit("sum", {a}, Tensor<T>(Shape{1, 1, 1, 1}, s), [a](const Tensor<T>& gout) {
    auto& ga = a->grad_buffer();
    for (auto& v : ga.data()) v += gout[0];
  });
}

template <typename T>
Var<T> sum_squares(Graph<T>& g, const Var<T>& a) {
  T s = 0;
  for (T v : a->value.data()) s += v * v;
  return g.emit("sum_squares", {a}, Tensor<T>(Shape{1, 1, 1, 1}, s),
                [a](const Tensor<T>& gout) {
                  auto& ga = a->grad_buffer();
                  for (std::size_t i = 0; i < ga.numel(); ++i) {
                    ga[i] += T(2) * a->value[i] * gout[0];
                  }
                });
}

template <typename T>
Var<T> add_scalars(Graph<T>& g, const std::vector<Var<T>>& terms) {
  if (terms.empty()) fail("add_scalars", "no terms");
  T s = 0;
  for (const auto& t : terms) {
    if (t->value.numel() != 1) fail("add_scalars", "term is not a scalar: " + t->value.shape().str());
    s += t->value[0];
  }
  return g.emit("add_scalars", terms, Tensor<T>(Shape{1, 1, 1, 1}, s),
                [terms](const Tensor<T>& gout) {
                  for (const auto& t : terms) {
                    if (t->requires_grad) t->grad_buffer()[0] += gout[0];
                  }
                });
}

#define SHIFTCONV_INSTANTIATE_OPS(T)                                                       \
  template Var<T> conv2d(Graph<T>&, const Var<T>&, const Var<T>&, const Var<T>&, int, int); \
  template Var<T> transposed_conv2d(Graph<T>&, const Var<T>&, const Var<T>&, const Var<T>&, \
                                    int, int);                                             \
  template Var<T> maxpool2d(Graph<T>&, const Var<T>&);                                     \
  template Var<T> leaky_relu(Graph<T>&, const Var<T>&, T);                                 \
  template Var<T> concat_channels(Graph<T>&, const std::vector<Var<T>>&);                  \
  template Var<T> slice_channels(Graph<T>&, const Var<T>&, int, int);                      \
  template Var<T> hslice_pad(Graph<T>&, const Var<T>&, int);                               \
  template Var<T> add(Graph<T>&, const Var<T>&, const Var<T>&);                            \
  template Var<T> sub(Graph<T>&, const Var<T>&, const Var<T>&);                            \
  template Var<T> mul(Graph<T>&, const Var<T>&, const Var<T>&);                            \
  template Var<T> scale(Graph<T>&, const Var<T>&, T);                                      \
  template Var<T> sum(Graph<T>&, const Var<T>&);                                           \
  template Var<T> sum_squares(Graph<T>&, const Var<T>&);                                   \
  template Var<T> add_scalars(Graph<T>&, const std::vector<Var<T>>&);

SHIFTCONV_INSTANTIATE_OPS(float)
SHIFTCONV_INSTANTIATE_OPS(double)

#undef SHIFTCONV_INSTANTIATE_OPS

}  // namespace ops
}  // namespace shiftconv
