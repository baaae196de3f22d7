// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geoae/ops.hpp"
#include "geoae/tensor.hpp"

namespace geoae {

inline constexpr double kLeakySlope = 0.2;

enum class LayerKind {
  kDown,  // stride-2 convolution, padding 1
  kUp,    // zero-insertion upsampling by 2, then stride-1 convolution
};

struct LayerSpec {
  LayerKind kind = LayerKind::kDown;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  bool has_bias = true;
  double alpha = kLeakySlope;  // 1.0 makes the layer linear
  int dims = 2;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Ordered layer list plus the per-sample input shape, (C, H, W) or (C, L).
struct NetworkSpec {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;

  /// Per-sample output shape; throws std::invalid_argument naming the first
  /// layer whose channels, dimensionality or extents do not chain.
  Shape output_shape() const;
  void validate() const { (void)output_shape(); }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Topologies used throughout. Channel depths are listed input -> output.
NetworkSpec disk_encoder_spec(bool with_bias);
NetworkSpec disk_decoder_spec(bool with_bias);
NetworkSpec position_encoder_spec(bool with_bias, int levels = 6,
                                  double alpha = kLeakySlope);
NetworkSpec position_decoder_spec(bool with_bias);
/// Generic chain with the given depth sequence (depths.size() - 1 layers).
NetworkSpec chain_spec(std::string name, LayerKind kind, int dims,
                       std::span<const std::size_t> depths,
                       std::size_t input_extent, bool with_bias, double alpha);

class Network {
 public:
  /// Saved activations of one forward pass, consumed by backward().
  struct Trace {
    std::vector<Tensor> inputs;  // input of each layer
    std::vector<Tensor> pre;     // convolution output before the activation
  };

  Network() = default;
  /// Validates that `params` match the spec layer by layer.
  Network(NetworkSpec spec, std::vector<ConvParams> params);

  /// Glorot-uniform weights from `seed`, zero biases.
  static Network build(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  std::span<const ConvParams> layers() const { return params_; }
  std::span<ConvParams> layers() { return params_; }

  /// Weight then bias per layer, in layer order. Names are "<layer>.weights"
  /// and "<layer>.bias".
  std::vector<ParameterRef> parameters();
  std::size_t parameter_count() const;

  /// `x` has shape (N, input_shape...). Fills `trace` when given.
  Tensor forward(const Tensor& x, Trace* trace = nullptr) const;

  /// Backpropagates `output_grad` through a traced pass. Parameter gradients
  /// are added to `param_grad` (flat, parameters() order, parameter_count()
  /// long). Returns the gradient with respect to the network input.
  Tensor backward(const Trace& trace, const Tensor& output_grad,
                  std::span<double> param_grad) const;

  /// Copies a flat parameter vector into / out of the layers.
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);

  friend bool operator==(const Network& a, const Network& b);

 private:
  NetworkSpec spec_;
  std::vector<ConvParams> params_;
};

/// Prepends the batch axis: (N, input_shape...).
Shape batch_shape(const Shape& per_sample, std::size_t batch);

/// Runs the encoder; returns codes as an (N, d) tensor.
Tensor encode(const Network& encoder, const Tensor& x);
/// Runs the decoder on (N, d) codes.
Tensor decode(const Network& decoder, const Tensor& z);

/// Linear position encoder: `levels` stride-2 layers, kernel scale*[1, 2, 1],
/// no bias, no activation. Input length 2^levels.
Network build_handcrafted_position_encoder(int levels, double scale = 1.0);
/// 2^levels - position, the closed form the hand-crafted encoder reproduces.
double position_encode_closed_form(long position, int levels);

}  // namespace geoae
