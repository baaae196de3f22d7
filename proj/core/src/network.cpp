// SPDX-License-Identifier: Apache-2.0
#include "geoae/network.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace geoae {

namespace {

std::string layer_error(std::size_t index, const std::string& what) {
  return "layer " + std::to_string(index) + ": " + what;
}

}  // namespace

Shape NetworkSpec::output_shape() const {
  if (input_shape.size() != 2 && input_shape.size() != 3) {
    throw std::invalid_argument("network input shape must be (C, L) or (C, H, W), got " +
                                shape_string(input_shape));
  }
  Shape cur = input_shape;
  const int dims = static_cast<int>(input_shape.size()) - 1;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.dims != dims) {
      throw std::invalid_argument(layer_error(i, "is " + std::to_string(l.dims) +
                                                     "D but the input is " +
                                                     std::to_string(dims) + "D"));
    }
    if (l.in_channels != cur[0]) {
      throw std::invalid_argument(layer_error(
          i, "expects " + std::to_string(l.in_channels) + " input channels, receives " +
                 std::to_string(cur[0])));
    }
    if (l.out_channels == 0) {
      throw std::invalid_argument(layer_error(i, "has zero output channels"));
    }
    if (!(l.alpha >= 0.0 && l.alpha <= 1.0)) {
      throw std::invalid_argument(layer_error(i, "leaky slope must lie in [0, 1]"));
    }
    cur[0] = l.out_channels;
    for (std::size_t a = 1; a < cur.size(); ++a) {
      if (l.kind == LayerKind::kDown) {
        if (cur[a] < 2 || cur[a] % 2 != 0) {
          throw std::invalid_argument(layer_error(
              i, "cannot halve spatial extent " + std::to_string(cur[a])));
        }
        cur[a] /= 2;
      } else {
        cur[a] *= 2;
      }
    }
  }
  return cur;
}

NetworkSpec chain_spec(std::string name, LayerKind kind, int dims,
                       std::span<const std::size_t> depths,
                       std::size_t input_extent, bool with_bias, double alpha) {
  if (depths.size() < 2) throw std::invalid_argument("chain needs at least two depths");
  NetworkSpec spec;
  spec.name = std::move(name);
  spec.input_shape = dims == 2 ? Shape{depths[0], input_extent, input_extent}
                               : Shape{depths[0], input_extent};
  for (std::size_t i = 0; i + 1 < depths.size(); ++i) {
    spec.layers.push_back(LayerSpec{kind, depths[i], depths[i + 1], with_bias, alpha, dims});
  }
  spec.validate();
  return spec;
}

NetworkSpec disk_encoder_spec(bool with_bias) {
  constexpr std::array<std::size_t, 7> depths{1, 8, 4, 4, 3, 2, 1};
  return chain_spec(with_bias ? "disk_encoder" : "disk_encoder_nobias", LayerKind::kDown,
                    2, depths, 64, with_bias, kLeakySlope);
}

NetworkSpec disk_decoder_spec(bool with_bias) {
  constexpr std::array<std::size_t, 7> depths{1, 2, 3, 4, 4, 8, 1};
  return chain_spec(with_bias ? "disk_decoder" : "disk_decoder_nobias", LayerKind::kUp, 2,
                    depths, 1, with_bias, kLeakySlope);
}

NetworkSpec position_encoder_spec(bool with_bias, int levels, double alpha) {
  if (levels < 1 || levels > 20) throw std::invalid_argument("levels must be in [1, 20]");
  std::vector<std::size_t> depths(static_cast<std::size_t>(levels) + 1, 1);
  return chain_spec("position_encoder", LayerKind::kDown, 1, depths,
                    std::size_t{1} << levels, with_bias, alpha);
}

NetworkSpec position_decoder_spec(bool with_bias) {
  // Widest layers next to the code, tapering to one output channel.
  constexpr std::array<std::size_t, 7> depths{1, 8, 4, 4, 4, 2, 1};
  return chain_spec("position_decoder", LayerKind::kUp, 1, depths, 1, with_bias,
                    kLeakySlope);
}

Network::Network(NetworkSpec spec, std::vector<ConvParams> params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (params_.size() != spec_.layers.size()) {
    throw std::invalid_argument("network has " + std::to_string(spec_.layers.size()) +
                                " layers but " + std::to_string(params_.size()) +
                                " parameter sets");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const ConvParams expected = ConvParams::zeros(l.dims, l.in_channels, l.out_channels,
                                                  l.has_bias);
    const ConvParams& p = params_[i];
    if (p.weights.shape() != expected.weights.shape()) {
      throw std::invalid_argument(layer_error(i, "weight shape " +
                                                     shape_string(p.weights.shape()) +
                                                     " expected " +
                                                     shape_string(expected.weights.shape())));
    }
    if (p.bias.has_value() != l.has_bias ||
        (p.bias && p.bias->shape() != expected.bias->shape())) {
      throw std::invalid_argument(layer_error(i, "bias presence or shape does not match spec"));
    }
  }
}

Network Network::build(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<ConvParams> params;
  for (const LayerSpec& l : spec.layers) {
    ConvParams p = ConvParams::zeros(l.dims, l.in_channels, l.out_channels, l.has_bias);
    const double taps = l.dims == 2 ? 9.0 : 3.0;
    const double fan_in = taps * static_cast<double>(l.in_channels);
    const double fan_out = taps * static_cast<double>(l.out_channels);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : p.weights.data()) w = dist(rng);
    params.push_back(std::move(p));
  }
  return Network(spec, std::move(params));
}

std::vector<ParameterRef> Network::parameters() {
  std::vector<ParameterRef> refs;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string prefix = spec_.name + ".layer" + std::to_string(i);
    refs.push_back({prefix + ".weights", &params_[i].weights});
    if (params_[i].bias) refs.push_back({prefix + ".bias", &*params_[i].bias});
  }
  return refs;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.weights.size() + (p.bias ? p.bias->size() : 0);
  return n;
}

Shape batch_shape(const Shape& per_sample, std::size_t batch) {
  Shape s{batch};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

Tensor Network::forward(const Tensor& x, Trace* trace) const {
  if (x.rank() != spec_.input_shape.size() + 1 ||
      !std::equal(spec_.input_shape.begin(), spec_.input_shape.end(), x.shape().begin() + 1)) {
    throw std::invalid_argument(spec_.name + ": input shape " + shape_string(x.shape()) +
                                " does not match (N, " +
                                shape_string(spec_.input_shape).substr(1));
  }
  if (trace) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  Tensor cur = x;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    Tensor pre = l.kind == LayerKind::kDown ? conv_forward(cur, params_[i], 2, 1)
                                            : upsample_conv_forward(cur, params_[i]);
    Tensor out = l.alpha == 1.0 ? pre : leaky_relu(pre, l.alpha);
    if (trace) {
      trace->inputs.push_back(std::move(cur));
      trace->pre.push_back(std::move(pre));
    }
    cur = std::move(out);
  }
  return cur;
}

Tensor Network::backward(const Trace& trace, const Tensor& output_grad,
                         std::span<double> param_grad) const {
  if (trace.inputs.size() != params_.size()) {
    throw std::invalid_argument(spec_.name + ": trace does not belong to this network");
  }
  if (param_grad.size() != parameter_count()) {
    throw std::invalid_argument(spec_.name + ": gradient buffer has wrong length");
  }
  // Offsets of each layer's block in the flat gradient.
  std::vector<std::size_t> offsets(params_.size());
  std::size_t off = 0;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    offsets[i] = off;
    off += params_[i].weights.size() + (params_[i].bias ? params_[i].bias->size() : 0);
  }

  Tensor grad = output_grad;
  for (std::size_t li = params_.size(); li-- > 0;) {
    const LayerSpec& l = spec_.layers[li];
    if (l.alpha != 1.0) grad = leaky_relu_backward(grad, trace.pre[li], l.alpha);
    ConvGrads g = l.kind == LayerKind::kDown
                      ? conv_backward(grad, trace.inputs[li], params_[li], 2, 1)
                      : upsample_conv_backward(grad, trace.inputs[li], params_[li]);
    double* dst = param_grad.data() + offsets[li];
    for (double v : g.weights.data()) *dst++ += v;
    if (g.bias) {
      for (double v : g.bias->data()) *dst++ += v;
    }
    grad = std::move(g.input);
  }
  return grad;
}

std::vector<double> Network::flat_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& p : params_) {
    flat.insert(flat.end(), p.weights.data().begin(), p.weights.data().end());
    if (p.bias) flat.insert(flat.end(), p.bias->data().begin(), p.bias->data().end());
  }
  return flat;
}

void Network::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument(spec_.name + ": expected " +
                                std::to_string(parameter_count()) + " parameters, got " +
                                std::to_string(flat.size()));
  }
  auto it = flat.begin();
  for (auto& p : params_) {
    for (double& w : p.weights.data()) w = *it++;
    if (p.bias) {
      for (double& b : p.bias->data()) b = *it++;
    }
  }
}

bool operator==(const Network& a, const Network& b) {
  return a.spec_ == b.spec_ && a.flat_parameters() == b.flat_parameters();
}

Tensor encode(const Network& encoder, const Tensor& x) {
  Tensor out = encoder.forward(x);
  const std::size_t n = out.extent(0);
  return out.reshaped({n, out.size() / n});
}

Tensor decode(const Network& decoder, const Tensor& z) {
  const Shape& in = decoder.spec().input_shape;
  const std::size_t d = shape_size(in);
  if (z.rank() != 2 || z.extent(1) != d) {
    throw std::invalid_argument(decoder.spec().name + ": codes must be (N, " +
                                std::to_string(d) + "), got " + shape_string(z.shape()));
  }
  return decoder.forward(z.reshaped(batch_shape(in, z.extent(0))));
}

Network build_handcrafted_position_encoder(int levels, double scale) {
  NetworkSpec spec = position_encoder_spec(false, levels, 1.0);
  spec.name = "handcrafted_position_encoder";
  std::vector<ConvParams> params;
  for (int i = 0; i < levels; ++i) {
    ConvParams p = ConvParams::zeros(1, 1, 1, false);
    p.weights[0] = scale;
    p.weights[1] = 2.0 * scale;
    p.weights[2] = scale;
    params.push_back(std::move(p));
  }
  return Network(std::move(spec), std::move(params));
}

double position_encode_closed_form(long position, int levels) {
  if (levels < 1 || levels > 52) throw std::invalid_argument("levels must be in [1, 52]");
  const long n = 1L << levels;
  if (position < 0 || position >= n) {
    throw std::invalid_argument("position " + std::to_string(position) +
                                " outside [0, " + std::to_string(n - 1) + "]");
  }
  return static_cast<double>(n - position);
}

}  // namespace geoae
