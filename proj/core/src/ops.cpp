// SPDX-License-Identifier: Apache-2.0
#include "geoae/ops.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace geoae {

ConvParams ConvParams::zeros(int dims, std::size_t c_in, std::size_t c_out,
                             bool with_bias) {
  ConvParams p;
  if (dims == 2) {
    p.weights = Tensor({kKernelSize, kKernelSize, c_in, c_out});
  } else if (dims == 1) {
    p.weights = Tensor({kKernelSize, c_in, c_out});
  } else {
    throw std::invalid_argument("convolution dims must be 1 or 2");
  }
  if (with_bias) p.bias = Tensor({c_out});
  return p;
}

std::size_t ConvParams::weight_index(std::size_t ky, std::size_t kx,
                                     std::size_t ci, std::size_t co) const {
  const std::size_t row = dims() == 2 ? ky * kKernelSize + kx : kx;
  return (row * in_channels() + ci) * out_channels() + co;
}

Tensor leaky_relu(const Tensor& x, double alpha) {
  Tensor y = x;
  for (double& v : y.data()) {
    if (v < 0.0) v *= alpha;
  }
  return y;
}

Tensor leaky_relu_backward(const Tensor& output_grad, const Tensor& pre_activation,
                           double alpha) {
  if (output_grad.shape() != pre_activation.shape()) {
    throw std::invalid_argument("leaky_relu_backward: gradient shape " +
                                shape_string(output_grad.shape()) +
                                " != activation shape " +
                                shape_string(pre_activation.shape()));
  }
  Tensor g = output_grad;
  auto pre = pre_activation.data();
  auto gd = g.data();
  for (std::size_t i = 0; i < gd.size(); ++i) {
    if (pre[i] <= 0.0) gd[i] *= alpha;
  }
  return g;
}

namespace {

// 1D signals are handled as 2D with height 1 and a single kernel row.
struct Geometry {
  std::size_t batch = 0, c_in = 0, c_out = 0;
  std::size_t h = 0, w = 0;     // input spatial extents
  std::size_t oh = 0, ow = 0;   // output spatial extents
  std::size_t kh = 1;           // kernel rows (1 for 1D, 3 for 2D)
  std::size_t stride_h = 1, stride_w = 1;
  std::ptrdiff_t pad_h = 0, pad_w = 0;
  bool two_d = false;

  Shape input_shape() const {
    return two_d ? Shape{batch, c_in, h, w} : Shape{batch, c_in, w};
  }
  Shape output_shape() const {
    return two_d ? Shape{batch, c_out, oh, ow} : Shape{batch, c_out, ow};
  }
};

void check_params(const ConvParams& params) {
  const auto& ws = params.weights.shape();
  const bool ok = (ws.size() == 3 && ws[0] == kKernelSize) ||
                  (ws.size() == 4 && ws[0] == kKernelSize && ws[1] == kKernelSize);
  if (!ok) {
    throw std::invalid_argument("convolution weights must be (3, c_in, c_out) or "
                                "(3, 3, c_in, c_out), got " + shape_string(ws));
  }
  if (params.bias && params.bias->shape() != Shape{params.out_channels()}) {
    throw std::invalid_argument("bias shape " + shape_string(params.bias->shape()) +
                                " does not match c_out = " +
                                std::to_string(params.out_channels()));
  }
}

Geometry input_geometry(const Tensor& input, const ConvParams& params) {
  check_params(params);
  Geometry g;
  g.two_d = params.dims() == 2;
  const std::size_t expected_rank = g.two_d ? 4 : 3;
  if (input.rank() != expected_rank) {
    throw std::invalid_argument("convolution input must have rank " +
                                std::to_string(expected_rank) + ", got shape " +
                                shape_string(input.shape()));
  }
  g.batch = input.extent(0);
  g.c_in = input.extent(1);
  if (g.c_in != params.in_channels()) {
    throw std::invalid_argument("input has " + std::to_string(g.c_in) +
                                " channels but weights expect c_in = " +
                                std::to_string(params.in_channels()));
  }
  g.c_out = params.out_channels();
  g.h = g.two_d ? input.extent(2) : 1;
  g.w = input.extent(expected_rank - 1);
  g.kh = g.two_d ? kKernelSize : 1;
  return g;
}

Geometry conv_geometry(const Tensor& input, const ConvParams& params, int stride,
                       int padding) {
  if (stride < 1 || stride > 2) {
    throw std::invalid_argument("stride must be 1 or 2, got " + std::to_string(stride));
  }
  if (padding < 0) throw std::invalid_argument("padding must be non-negative");
  Geometry g = input_geometry(input, params);
  g.stride_w = static_cast<std::size_t>(stride);
  g.pad_w = padding;
  if (g.two_d) {
    g.stride_h = g.stride_w;
    g.pad_h = padding;
  }
  auto out_extent = [](std::size_t n, std::ptrdiff_t pad, std::size_t stride,
                       std::size_t k) -> std::size_t {
    const std::ptrdiff_t span = static_cast<std::ptrdiff_t>(n) + 2 * pad -
                                static_cast<std::ptrdiff_t>(k);
    if (span < 0) {
      throw std::invalid_argument("input extent " + std::to_string(n) +
                                  " too small for kernel");
    }
    return static_cast<std::size_t>(span) / stride + 1;
  };
  g.oh = out_extent(g.h, g.pad_h, g.stride_h, g.kh);
  g.ow = out_extent(g.w, g.pad_w, g.stride_w, kKernelSize);
  return g;
}

// Output positions o in [lo, hi] whose input index o * stride + k - pad is valid.
struct Range {
  std::size_t lo = 0, hi = 0;
  bool empty = true;
};

Range valid_outputs(std::size_t k, std::size_t stride, std::ptrdiff_t pad,
                    std::size_t in_extent, std::size_t out_extent) {
  const auto sk = static_cast<std::ptrdiff_t>(k);
  const auto ss = static_cast<std::ptrdiff_t>(stride);
  std::ptrdiff_t lo = pad - sk;  // need o * s >= pad - k
  lo = lo <= 0 ? 0 : (lo + ss - 1) / ss;
  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(in_extent) - 1 + pad - sk;
  if (hi < 0) return {};
  hi = std::min<std::ptrdiff_t>(hi / ss, static_cast<std::ptrdiff_t>(out_extent) - 1);
  if (lo > hi) return {};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi), false};
}

// Flat offset of the input sample read by output (oy, 0) through tap (ky, kx);
// may be negative, callers only index valid positions.
std::ptrdiff_t input_offset(const Geometry& g, std::size_t oy, std::size_t ky,
                            std::size_t kx) {
  const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride_h + ky) - g.pad_h;
  return iy * static_cast<std::ptrdiff_t>(g.w) + static_cast<std::ptrdiff_t>(kx) - g.pad_w;
}

}  // namespace

Tensor conv_forward(const Tensor& input, const ConvParams& params, int stride,
                    int padding) {
  const Geometry g = conv_geometry(input, params, stride, padding);
  Tensor out(g.output_shape());
  const double* in = input.data().data();
  double* o = out.data().data();
  const double* w = params.weights.data().data();
  const std::size_t in_plane = g.h * g.w;
  const std::size_t out_plane = g.oh * g.ow;

  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t co = 0; co < g.c_out; ++co) {
      double* op = o + (n * g.c_out + co) * out_plane;
      if (params.bias) std::fill(op, op + out_plane, (*params.bias)[co]);
      for (std::size_t ci = 0; ci < g.c_in; ++ci) {
        const double* ip = in + (n * g.c_in + ci) * in_plane;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const Range ry = valid_outputs(ky, g.stride_h, g.pad_h, g.h, g.oh);
          if (ry.empty) continue;
          for (std::size_t kx = 0; kx < kKernelSize; ++kx) {
            const Range rx = valid_outputs(kx, g.stride_w, g.pad_w, g.w, g.ow);
            if (rx.empty) continue;
            const double wv = w[params.weight_index(ky, kx, ci, co)];
            for (std::size_t oy = ry.lo; oy <= ry.hi; ++oy) {
              const std::ptrdiff_t base = input_offset(g, oy, ky, kx);
              double* orow = op + oy * g.ow;
              for (std::size_t ox = rx.lo; ox <= rx.hi; ++ox) {
                orow[ox] += wv * ip[base + static_cast<std::ptrdiff_t>(ox * g.stride_w)];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

ConvGrads conv_backward(const Tensor& output_grad, const Tensor& saved_input,
                        const ConvParams& params, int stride, int padding) {
  const Geometry g = conv_geometry(saved_input, params, stride, padding);
  if (output_grad.shape() != g.output_shape()) {
    throw std::invalid_argument("conv_backward: output gradient shape " +
                                shape_string(output_grad.shape()) +
                                " does not match forward output shape " +
                                shape_string(g.output_shape()));
  }
  ConvGrads grads;
  grads.input = Tensor(g.input_shape());
  grads.weights = Tensor(params.weights.shape());
  if (params.bias) grads.bias = Tensor(params.bias->shape());

  const double* in = saved_input.data().data();
  const double* go = output_grad.data().data();
  const double* w = params.weights.data().data();
  double* gi = grads.input.data().data();
  double* gw = grads.weights.data().data();
  const std::size_t in_plane = g.h * g.w;
  const std::size_t out_plane = g.oh * g.ow;

  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t co = 0; co < g.c_out; ++co) {
      const double* gop = go + (n * g.c_out + co) * out_plane;
      if (grads.bias) {
        double s = 0.0;
        for (std::size_t i = 0; i < out_plane; ++i) s += gop[i];
        (*grads.bias)[co] += s;
      }
      for (std::size_t ci = 0; ci < g.c_in; ++ci) {
        const double* ip = in + (n * g.c_in + ci) * in_plane;
        double* gip = gi + (n * g.c_in + ci) * in_plane;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const Range ry = valid_outputs(ky, g.stride_h, g.pad_h, g.h, g.oh);
          if (ry.empty) continue;
          for (std::size_t kx = 0; kx < kKernelSize; ++kx) {
            const Range rx = valid_outputs(kx, g.stride_w, g.pad_w, g.w, g.ow);
            if (rx.empty) continue;
            const std::size_t widx = params.weight_index(ky, kx, ci, co);
            const double wv = w[widx];
            double acc = 0.0;
            for (std::size_t oy = ry.lo; oy <= ry.hi; ++oy) {
              const std::ptrdiff_t base = input_offset(g, oy, ky, kx);
              const double* grow = gop + oy * g.ow;
              for (std::size_t ox = rx.lo; ox <= rx.hi; ++ox) {
                const std::ptrdiff_t i = base + static_cast<std::ptrdiff_t>(ox * g.stride_w);
                acc += ip[i] * grow[ox];
                gip[i] += wv * grow[ox];
              }
            }
            gw[widx] += acc;
          }
        }
      }
    }
  }
  return grads;
}

Tensor upsample_zero(const Tensor& input, int factor) {
  if (factor < 1) throw std::invalid_argument("upsample factor must be >= 1");
  const auto f = static_cast<std::size_t>(factor);
  const std::size_t rank = input.rank();
  if (rank != 3 && rank != 4) {
    throw std::invalid_argument("upsample_zero expects (N, C, L) or (N, C, H, W), got " +
                                shape_string(input.shape()));
  }
  const bool two_d = rank == 4;
  const std::size_t planes = input.extent(0) * input.extent(1);
  const std::size_t h = two_d ? input.extent(2) : 1;
  const std::size_t w = input.extent(rank - 1);
  const std::size_t fh = two_d ? f : 1;
  Shape out_shape = input.shape();
  out_shape[rank - 1] *= f;
  if (two_d) out_shape[2] *= f;
  Tensor out(out_shape);
  const std::size_t ow = w * f;
  const std::size_t out_plane = h * fh * ow;
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        out[p * out_plane + y * fh * ow + x * f] = input[(p * h + y) * w + x];
      }
    }
  }
  return out;
}

Tensor subsample(const Tensor& input, int factor) {
  if (factor < 1) throw std::invalid_argument("subsample factor must be >= 1");
  const auto f = static_cast<std::size_t>(factor);
  const std::size_t rank = input.rank();
  if (rank != 3 && rank != 4) {
    throw std::invalid_argument("subsample expects (N, C, L) or (N, C, H, W), got " +
                                shape_string(input.shape()));
  }
  const bool two_d = rank == 4;
  const std::size_t planes = input.extent(0) * input.extent(1);
  const std::size_t h = two_d ? input.extent(2) : 1;
  const std::size_t w = input.extent(rank - 1);
  const std::size_t fh = two_d ? f : 1;
  const std::size_t oh = (h + fh - 1) / fh;
  const std::size_t ow = (w + f - 1) / f;
  Shape out_shape = input.shape();
  out_shape[rank - 1] = ow;
  if (two_d) out_shape[2] = oh;
  Tensor out(out_shape);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        out[(p * oh + y) * ow + x] = input[(p * h + y * fh) * w + x * f];
      }
    }
  }
  return out;
}

namespace {

// Geometry of conv(upsample_zero(x, 2), stride 1, pad 1). An input sample at
// (iy, ix) sits at (uh * iy, 2 * ix) in the upsampled grid and reaches output
// (uh * iy - ky + pad_h, 2 * ix - kx + 1) through tap (ky, kx).
Geometry upsample_geometry(const Tensor& input, const ConvParams& params) {
  Geometry g = input_geometry(input, params);
  g.oh = g.two_d ? 2 * g.h : 1;
  g.ow = 2 * g.w;
  g.pad_h = g.two_d ? 1 : 0;
  g.pad_w = 1;
  return g;
}

// Input indices i whose upsampled position up * i - k + pad lands in [0, out).
Range valid_inputs(std::size_t k, std::size_t up, std::ptrdiff_t pad,
                   std::size_t in_extent, std::size_t out_extent) {
  const auto sk = static_cast<std::ptrdiff_t>(k);
  const auto su = static_cast<std::ptrdiff_t>(up);
  std::ptrdiff_t lo = sk - pad;  // need up * i >= k - pad
  lo = lo <= 0 ? 0 : (lo + su - 1) / su;
  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(out_extent) - 1 + sk - pad;
  if (hi < 0) return {};
  hi = std::min<std::ptrdiff_t>(hi / su, static_cast<std::ptrdiff_t>(in_extent) - 1);
  if (lo > hi) return {};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi), false};
}

// Flat offset of the output reached from input (iy, 0) through tap (ky, kx).
std::ptrdiff_t output_offset(const Geometry& g, std::size_t uh, std::size_t iy,
                             std::size_t ky, std::size_t kx) {
  const auto oy = static_cast<std::ptrdiff_t>(uh * iy) + g.pad_h -
                  static_cast<std::ptrdiff_t>(ky);
  return oy * static_cast<std::ptrdiff_t>(g.ow) + g.pad_w - static_cast<std::ptrdiff_t>(kx);
}

}  // namespace

Tensor upsample_conv_forward(const Tensor& input, const ConvParams& params) {
  const Geometry g = upsample_geometry(input, params);
  const std::size_t uh = g.two_d ? 2 : 1;
  Tensor out(g.output_shape());
  const double* in = input.data().data();
  double* o = out.data().data();
  const double* w = params.weights.data().data();
  const std::size_t in_plane = g.h * g.w;
  const std::size_t out_plane = g.oh * g.ow;

  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t co = 0; co < g.c_out; ++co) {
      double* op = o + (n * g.c_out + co) * out_plane;
      if (params.bias) std::fill(op, op + out_plane, (*params.bias)[co]);
      for (std::size_t ci = 0; ci < g.c_in; ++ci) {
        const double* ip = in + (n * g.c_in + ci) * in_plane;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const Range ry = valid_inputs(ky, uh, g.pad_h, g.h, g.oh);
          if (ry.empty) continue;
          for (std::size_t kx = 0; kx < kKernelSize; ++kx) {
            const Range rx = valid_inputs(kx, 2, g.pad_w, g.w, g.ow);
            if (rx.empty) continue;
            const double wv = w[params.weight_index(ky, kx, ci, co)];
            for (std::size_t iy = ry.lo; iy <= ry.hi; ++iy) {
              const std::ptrdiff_t base = output_offset(g, uh, iy, ky, kx);
              const double* irow = ip + iy * g.w;
              for (std::size_t ix = rx.lo; ix <= rx.hi; ++ix) {
                op[base + static_cast<std::ptrdiff_t>(2 * ix)] += wv * irow[ix];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

ConvGrads upsample_conv_backward(const Tensor& output_grad, const Tensor& saved_input,
                                 const ConvParams& params) {
  const Geometry g = upsample_geometry(saved_input, params);
  if (output_grad.shape() != g.output_shape()) {
    throw std::invalid_argument("upsample_conv_backward: output gradient shape " +
                                shape_string(output_grad.shape()) +
                                " does not match forward output shape " +
                                shape_string(g.output_shape()));
  }
  const std::size_t uh = g.two_d ? 2 : 1;
  ConvGrads grads;
  grads.input = Tensor(g.input_shape());
  grads.weights = Tensor(params.weights.shape());
  if (params.bias) grads.bias = Tensor(params.bias->shape());

  const double* in = saved_input.data().data();
  const double* go = output_grad.data().data();
  const double* w = params.weights.data().data();
  double* gi = grads.input.data().data();
  double* gw = grads.weights.data().data();
  const std::size_t in_plane = g.h * g.w;
  const std::size_t out_plane = g.oh * g.ow;

  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t co = 0; co < g.c_out; ++co) {
      const double* gop = go + (n * g.c_out + co) * out_plane;
      if (grads.bias) {
        double s = 0.0;
        for (std::size_t i = 0; i < out_plane; ++i) s += gop[i];
        (*grads.bias)[co] += s;
      }
      for (std::size_t ci = 0; ci < g.c_in; ++ci) {
        const double* ip = in + (n * g.c_in + ci) * in_plane;
        double* gip = gi + (n * g.c_in + ci) * in_plane;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const Range ry = valid_inputs(ky, uh, g.pad_h, g.h, g.oh);
          if (ry.empty) continue;
          for (std::size_t kx = 0; kx < kKernelSize; ++kx) {
            const Range rx = valid_inputs(kx, 2, g.pad_w, g.w, g.ow);
            if (rx.empty) continue;
            const std::size_t widx = params.weight_index(ky, kx, ci, co);
            const double wv = w[widx];
            double acc = 0.0;
            for (std::size_t iy = ry.lo; iy <= ry.hi; ++iy) {
              const std::ptrdiff_t base = output_offset(g, uh, iy, ky, kx);
              const double* irow = ip + iy * g.w;
              double* girow = gip + iy * g.w;
              for (std::size_t ix = rx.lo; ix <= rx.hi; ++ix) {
                const double go_v = gop[base + static_cast<std::ptrdiff_t>(2 * ix)];
                acc += irow[ix] * go_v;
                girow[ix] += wv * go_v;
              }
            }
            gw[widx] += acc;
          }
        }
      }
    }
  }
  return grads;
}

}  // namespace geoae
