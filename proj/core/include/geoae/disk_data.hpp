// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace geoae {

inline constexpr std::size_t kImageSize = 64;
inline constexpr std::size_t kSignalLength = 64;
inline constexpr double kDefaultBlurSigma = 1.0;
inline constexpr std::size_t kDefaultMcSamples = 4096;

/// Gaussian-blurred indicator of a disk centred on the pixel grid.
struct DiskImage {
  double radius = 0.0;
  std::size_t m = 0;
  std::vector<double> pixels;  // row-major m x m, values in [0, 1]

  double at(std::size_t y, std::size_t x) const { return pixels[y * m + x]; }
  double mass() const;
};

/// Triangular approximation of a Dirac at a continuous position.
struct DiracSignal {
  double position = 0.0;
  std::vector<double> samples;
};

/// Closed interval [low, high] of excluded parameter values.
struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool contains(double v) const { return v >= low && v <= high; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class SignalKind { kDisks, kDiracs };

std::string to_string(SignalKind kind);
SignalKind signal_kind_from_string(const std::string& s);

struct DatasetSpec {
  SignalKind kind = SignalKind::kDisks;
  std::size_t count = 3000;
  /// Parameters are drawn uniformly from (support_low, support_high].
  double support_low = 0.5;
  double support_high = 32.0;
  std::vector<Interval> exclusions;
  std::size_t extent = kImageSize;  // m for disks, n for Diracs
  double sigma = kDefaultBlurSigma;
  std::size_t mc_samples = kDefaultMcSamples;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.1;

  /// Throws ConfigError on an empty or inconsistent specification.
  void validate() const;
  std::size_t sample_size() const;

  static DatasetSpec disks(std::size_t count, std::uint64_t seed);
  static DatasetSpec diracs(std::size_t count, std::uint64_t seed);

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

/// Monte Carlo blur: one set of N Gaussian offsets is drawn from `seed`, and
/// every pixel reports the fraction of its offset probes falling inside the
/// disk of radius r centred at ((m-1)/2, (m-1)/2).
DiskImage render_disk_mc(double radius, std::size_t m, double sigma, std::size_t samples,
                         std::uint64_t seed);

/// Deterministic oracle for render_disk_mc: the blur integral evaluated on a
/// dense sub-pixel grid of offsets covering +-6 sigma, each weighted by the
/// sampled Gaussian.
DiskImage render_disk_oracle(double radius, std::size_t m, double sigma,
                             std::size_t subsamples_per_pixel = 64);

/// max(0, 1 - |t - a|) sampled at t = 0..n-1.
DiracSignal render_dirac(double position, std::size_t n);

/// Uniform draw over the support minus the exclusions (rejection sampling).
double sample_parameter(const DatasetSpec& spec, std::mt19937_64& rng);

/// Rendered corpus. Parameters are drawn sequentially from spec.seed; sample
/// i is rendered with a seed derived from (spec.seed, i).
struct Dataset {
  DatasetSpec spec;
  std::vector<double> params;
  std::vector<double> signals;  // count x sample_size, row-major
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> holdout_indices;

  std::size_t size() const { return params.size(); }
  std::size_t sample_size() const { return spec.sample_size(); }
  const double* signal(std::size_t i) const { return signals.data() + i * sample_size(); }
};

Dataset build_dataset(const DatasetSpec& spec, int threads = 1);

/// Seed used to render sample `index` of a dataset seeded with `seed`.
std::uint64_t sample_seed(std::uint64_t seed, std::size_t index);

/// Writes manifest.json plus train.f64 / holdout.f64 (little-endian float64,
/// split order) into `dir`.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
/// Reads a saved dataset. Throws ConfigError on malformed or inconsistent files.
Dataset load_dataset(const std::filesystem::path& dir);
/// Regenerates from manifest.json alone and checks the stored arrays bit for bit.
bool verify_dataset(const std::filesystem::path& dir, int threads = 1);

}  // namespace geoae
