// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "geoae/disk_data.hpp"
#include "geoae/network.hpp"

namespace geoae {

enum class Regularizer { kNone, kPsi1, kPsi2, kPsi3 };

std::string to_string(Regularizer reg);
Regularizer regularizer_from_string(const std::string& s);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch = 300;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  bool with_bias = true;
  Regularizer reg = Regularizer::kNone;
  double lambda = 0.0;

  /// Throws ConfigError. `train_size` is the number of training samples.
  void validate(std::size_t train_size) const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
  /// FNV-1a of the canonical JSON form.
  std::string hash() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainHistory {
  std::vector<double> train_mse;    // mean per-sample squared error over the epoch
  std::vector<double> holdout_mse;  // after the epoch; NaN when there is no holdout
  std::vector<double> reg_value;    // unweighted regulariser value
  double wall_seconds = 0.0;

  std::string to_csv() const;
};

/// Supervised pairs for a chain of networks. When `targets` is empty the
/// inputs double as targets (autoencoding).
struct TrainingData {
  Shape input_shape;
  Shape target_shape;
  std::vector<double> inputs;
  std::vector<double> targets;
  std::vector<double> params;  // generating parameter of each sample
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> holdout_indices;

  std::size_t input_size() const { return shape_size(input_shape); }
  std::size_t target_size() const { return shape_size(target_shape); }
  const double* input(std::size_t i) const { return inputs.data() + i * input_size(); }
  const double* target(std::size_t i) const;
};

/// Disk images reconstructing themselves.
TrainingData autoencoder_data(const Dataset& disks);
/// Dirac signals regressed onto n - a, the hand-crafted encoder's output.
TrainingData position_encoder_data(const Dataset& diracs);
/// Code (n - a) / n regressed onto the Dirac signal y_a.
TrainingData position_decoder_data(const Dataset& diracs);
/// Input code used by the position decoder for a position a on n samples.
double position_code(double position, std::size_t n);

/// Mean over the batch of per-sample squared l2 distances. Tensors have a
/// leading batch axis and identical shapes.
double mse_loss(const Tensor& x, const Tensor& xhat);

/// Pair term (|x - x'|^2 - |z - z'|^2)^2 averaged over the batch, where
/// row i of `x` is paired with row neighbor[i].
double reg_psi1(std::span<const double> x, std::span<const double> z, std::size_t batch,
                std::span<const std::size_t> neighbor);
/// Convenience form running `encoder` on a batch and its neighbours.
double reg_psi1(const Tensor& x, const Tensor& x_neighbor, const Network& encoder);
/// Sum of squared convolution weights; biases are not included.
double reg_psi3(const Network& encoder);
double reg_psi2(const Network& encoder, const Network& decoder);

/// For each of `batch` elements, a uniformly random different element.
std::vector<std::size_t> pick_neighbor(std::size_t batch, std::mt19937_64& rng);

struct TrainOptions {
  int threads = 1;
  /// When set, history.csv and model.ckpt are written here, and a numeric
  /// failure leaves last_good.ckpt plus nan_batch.json.
  std::filesystem::path out_dir;
  std::string metadata = "{}";
  /// Recorded in the checkpoint header; defaults to the TrainConfig hash.
  std::string checkpoint_hash;
  std::function<void(std::size_t epoch, const TrainHistory&)> on_epoch;
};

/// Minimises the mean squared error of the chained networks (output of one
/// feeds the next) plus lambda times the regulariser, with Adam over shuffled
/// mini-batches. psi1 acts on the output of chain[0]; psi3 on chain[0]'s
/// weights; psi2 on all weights. Gradients are accumulated in fixed-size
/// chunks summed in order, so results do not depend on the thread count.
/// Throws NumericError on a non-finite loss or gradient.
TrainHistory train(std::vector<Network>& chain, const TrainingData& data,
                   const TrainConfig& config, const TrainOptions& options = {});

/// Forward pass through every network of the chain.
Tensor run_chain(std::span<const Network> chain, const Tensor& input);

/// Networks with seeds derived from config.seed.
std::vector<Network> build_disk_autoencoder(const TrainConfig& config);
std::vector<Network> build_position_encoder(const TrainConfig& config);
std::vector<Network> build_position_decoder(const TrainConfig& config);

/// Mean of the training loss and gradient over a small batch; used for the
/// finite-difference check of a whole chain.
double chain_loss_and_grad(std::vector<Network>& chain, const Tensor& input,
                           const Tensor& target, bool with_grad);

}  // namespace geoae
