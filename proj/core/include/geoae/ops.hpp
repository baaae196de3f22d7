// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "geoae/tensor.hpp"

namespace geoae {

inline constexpr std::size_t kKernelSize = 3;

/// Weights and optional bias of one 3-tap (1D) or 3x3 (2D) convolution.
struct ConvParams {
  Tensor weights;             // (3, c_in, c_out) or (3, 3, c_in, c_out)
  std::optional<Tensor> bias; // (c_out), absent in bias-free layers

  static ConvParams zeros(int dims, std::size_t c_in, std::size_t c_out,
                          bool with_bias);

  int dims() const { return weights.rank() == 4 ? 2 : 1; }
  std::size_t in_channels() const { return weights.extent(weights.rank() - 2); }
  std::size_t out_channels() const { return weights.extent(weights.rank() - 1); }
  /// Flat weight index for tap (ky, kx); ky is ignored for 1D.
  std::size_t weight_index(std::size_t ky, std::size_t kx, std::size_t ci,
                           std::size_t co) const;
};

struct ConvGrads {
  Tensor input;
  Tensor weights;
  std::optional<Tensor> bias;
};

/// y = x for x >= 0, alpha * x otherwise.
Tensor leaky_relu(const Tensor& x, double alpha);
/// Uses slope alpha at x == 0.
Tensor leaky_relu_backward(const Tensor& output_grad, const Tensor& pre_activation,
                           double alpha);

/// Zero-padded cross-correlation. Output index t reads input indices
/// t * stride + k - padding for k in {0, 1, 2}.
Tensor conv_forward(const Tensor& input, const ConvParams& params, int stride,
                    int padding);
ConvGrads conv_backward(const Tensor& output_grad, const Tensor& saved_input,
                        const ConvParams& params, int stride, int padding);

/// Inserts factor-1 zeros after every sample along each spatial axis.
Tensor upsample_zero(const Tensor& input, int factor);
/// Keeps every `factor`-th sample starting at index 0; adjoint of upsample_zero.
Tensor subsample(const Tensor& input, int factor);

/// conv_forward(upsample_zero(input, 2), params, 1, 1) without touching the
/// inserted zeros.
Tensor upsample_conv_forward(const Tensor& input, const ConvParams& params);
ConvGrads upsample_conv_backward(const Tensor& output_grad,
                                 const Tensor& saved_input,
                                 const ConvParams& params);

}  // namespace geoae
