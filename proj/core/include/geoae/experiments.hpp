// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "geoae/analysis.hpp"
#include "geoae/disk_data.hpp"
#include "geoae/network.hpp"
#include "geoae/training.hpp"

namespace geoae {

/// Everything that determines a suite's artifacts. `out_dir` and `threads`
/// do not affect results and are excluded from the hash.
struct ExperimentConfig {
  std::string suite = "disk-baseline";
  std::uint64_t seed = 0;
  DatasetSpec dataset;
  TrainConfig train;
  std::vector<std::string> analyses;
  std::filesystem::path out_dir;
  int threads = 1;

  /// Throws ConfigError before any work is done.
  void validate() const;
  /// Canonical JSON (sorted keys); includes "hash".
  std::string to_json() const;
  std::string hash() const;
  /// Hash of the fields that determine the trained networks (suite, dataset,
  /// training); stored in checkpoints so analyses can change without retraining.
  std::string training_hash() const;
};

std::vector<std::string> suite_names();
std::vector<std::string> analysis_names();

/// Defaults of a named suite for a root seed. Throws ConfigError listing the
/// known suites.
ExperimentConfig suite_config(const std::string& suite, std::uint64_t seed);

/// Applies the fields present in a JSON document ({"suite", "seed",
/// "dataset": {...}, "train": {...}, "analyses": [...]}) on top of the
/// defaults of its suite. A "seed" re-derives the dataset and training seeds
/// unless those are given explicitly.
ExperimentConfig config_from_json(const std::string& text);

/// Largest radius the training data can contain.
double max_observed_radius(const DatasetSpec& spec);

/// Networks trained (or reloaded when `reuse` is set and `dir`/model.ckpt
/// carries the same training hash). Position-handcrafted suites return
/// the hand-crafted encoder.
std::vector<Network> train_or_load(const ExperimentConfig& config, const std::filesystem::path& dir,
                                   bool reuse);

/// gen -> train -> analyze into config.out_dir. Writes config.json, dataset/,
/// train/, one CSV per analysis and summary.json; on failure leaves a FAILED
/// marker next to the partial artifacts and rethrows. Returns summary.json.
std::string run_suite(const ExperimentConfig& config, bool reuse_checkpoint = false);

/// Runs `config.analyses` on already trained networks, writing one CSV per
/// analysis into `dir`. Radius range and exclusions come from
/// config.dataset. Returns a JSON object with one entry per analysis.
std::string run_analyses(const ExperimentConfig& config, const std::vector<Network>& networks,
                         const std::filesystem::path& dir);

std::vector<std::string> figure_names();
/// Runs the minimal pipeline behind a figure into `out_dir`. Throws
/// ConfigError listing the available names for an unknown one.
void reproduce_figure(const std::string& name, std::uint64_t seed, std::size_t disk_epochs,
                      const std::filesystem::path& out_dir, int threads);

// ---- analyses shared by suites, the CLI and the acceptance checks --------

struct Rank1Report {
  std::vector<double> radii;
  std::vector<double> h;      // fitted per-radius scale
  std::vector<double> h_hat;  // <f, 1_B_r> / |f|^2 from the fitted template
  RankOneFit fit;
  RadialProfile profile;  // radial average of the template
  double pearson = 0.0;
};
Rank1Report analyze_rank1(const Network& encoder, const Network& decoder, double r_max,
                          int threads = 1);

struct ProfileReport {
  RadialProfile trained;       // from the dominant singular vector
  RadialProfile mean_profile;  // average of normalised output profiles
  RadialProfile optimal;       // maximiser of the decoding energy on [0, R]
  double l2_error = 0.0;
  double cosine = 0.0;
  double l2_error_mean_profile = 0.0;
};
ProfileReport analyze_profile(const Network& encoder, const Network& decoder, double r_max,
                              int threads = 1);

struct AiryReport {
  MaximizeResult optimal;
  AiryResult airy;
  double l2_error = 0.0;
};
AiryReport analyze_airy(double r_max, std::size_t cells = 512);

struct ErrorMapReport {
  std::vector<RadiusError> rows;
  double max_excluded = 0.0;     // max MSE over excluded radii
  double mean_excluded = 0.0;
  double median_observed = 0.0;  // median MSE over the other radii
  double mass_ratio_27_18 = 0.0;  // output mass at r = 27 over output mass at r = 18
};
ErrorMapReport analyze_error_map(const Network& encoder, const Network& decoder,
                                 std::span<const Interval> exclusions, int threads = 1);

/// Radius grid used by latent and error-map analyses.
std::vector<double> latent_radii();
std::vector<double> error_radii();

struct FilterReport {
  std::vector<std::array<double, 3>> taps;
  std::vector<double> cosines;  // |cos| with [1, 2, 1]
  int matching = 0;             // layers with |cos| >= 0.99
};
FilterReport analyze_filters(const Network& encoder);

struct DecodingReport {
  std::vector<double> positions;
  std::vector<std::size_t> argmax;
  std::vector<double> outputs;  // positions x n, each row scaled to max 1
  double accuracy = 0.0;        // fraction with |argmax - a| <= 1
};
/// Grid a = 1, 1.25, ..., 62 of positions that are not training samples.
DecodingReport analyze_decoding(const Network& decoder);

struct ExactnessReport {
  std::vector<double> level3;  // outputs for one-hots at 0..7
  std::size_t level6_correct = 0;
  std::size_t level6_total = 0;
  bool exact = false;
};
ExactnessReport analyze_exactness();

/// Max over `trials` log-uniform lambda in [1e-2, 1e2] of the elementwise
/// relative deviation between D(lambda z) and lambda D(z).
double homogeneity_deviation(const Network& decoder, double z, std::size_t trials,
                             std::uint64_t seed);

}  // namespace geoae
