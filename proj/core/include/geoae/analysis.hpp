// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "geoae/disk_data.hpp"
#include "geoae/network.hpp"

namespace geoae {

/// f(rho) sampled at cell midpoints rho_j = (j + 1/2) * step on [0, extent].
struct RadialProfile {
  double step = 0.0;
  std::vector<double> values;
  std::vector<std::size_t> counts;  // pixels per bin (radial_average only)
  bool normalised = false;

  std::size_t size() const { return values.size(); }
  double extent() const { return step * static_cast<double>(values.size()); }
  double radius(std::size_t j) const { return (static_cast<double>(j) + 0.5) * step; }
  /// Linear interpolation, constant below the first midpoint, 0 beyond extent().
  double at(double rho) const;

  /// 2 pi sum f^2 rho d rho.
  double norm2() const;
  /// Divides by sqrt(norm2()); throws on a zero profile.
  RadialProfile normalized() const;
  /// 2 pi sum f rho d rho over rho < r.
  double mass_within(double r) const;
};

RadialProfile make_profile(double extent, std::size_t cells,
                           const std::function<double(double)>& f);

/// Mean of the pixels of a square image in annuli of width `step` around the
/// grid centre ((m-1)/2, (m-1)/2). Bins cover [0, m/2]; pixels beyond are
/// ignored, empty bins are filled from the nearest occupied neighbour.
RadialProfile radial_average(std::span<const double> image, std::size_t m, double step = 0.125);

/// Rebuilds an m x m image from a profile by evaluating it at each pixel radius.
std::vector<double> radial_image(const RadialProfile& profile, std::size_t m);

struct RankOneFit {
  std::vector<double> h;         // one scalar per row
  std::vector<double> f;         // unit-norm template, one entry per column
  double sigma1 = 0.0;
  double residual_fraction = 0.0;  // 1 - sigma1^2 / sum sigma_k^2
};

/// Dominant singular pair of a rows x cols matrix (row-major). The sign is
/// chosen so f has positive sum. Throws ConfigError on an all-zero matrix.
RankOneFit rank1_fit(std::span<const double> matrix, std::size_t rows, std::size_t cols);

/// <f, 1_{B_r}> / |f|^2 with radial measure.
double optimal_h(const RadialProfile& f, double r);

struct MaximizeOptions {
  std::size_t iterations = 20000;
  double step = 1.0;
  double tolerance = 1e-10;  // relative change of J
};

struct MaximizeResult {
  RadialProfile profile;          // normalised, positive mass
  std::vector<double> energies;   // J per iteration, starting with the initial guess
  double initial_gradient_norm = 0.0;
  double final_gradient_norm = 0.0;  // tangent component of the gradient
  bool converged = false;
};

/// J(f) = int_0^R (int_0^r f rho d rho)^2 dr on a piecewise-constant profile.
double decoding_energy(const RadialProfile& f);

/// Projected gradient ascent of J on the unit sphere of the radial l2 norm.
MaximizeResult maximize_J(double R, std::size_t cells, const MaximizeOptions& options = {});

struct AiryResult {
  RadialProfile profile;  // normalised, truncated at the first zero R
  double k = 0.0;
  double first_zero = 0.0;
};

/// Solution of y'' = -k t y, y(0) = 1, y'(0) = 0 on [0, R] with k chosen so
/// the first zero is at R, then normalised.
AiryResult airy_profile(double R, std::size_t cells);
/// RK4 integration of y'' = -k t y from (1, 0); returns y and y' at t_end.
std::pair<double, double> integrate_airy(double k, double t_end, std::size_t steps);
/// First zero of y on (0, t_max] located by RK4 plus cubic Hermite
/// interpolation; returns a negative value when y has no zero there.
double airy_first_zero(double k, double t_max, std::size_t steps);

/// L2 relative error |a - b| / |b| under the radial measure after a and b are
/// both normalised and the sign of a is aligned with b. Profiles may use
/// different grids; comparison happens on the finer one, zero beyond extent.
double profile_l2_error(const RadialProfile& a, const RadialProfile& b);
double profile_cosine(const RadialProfile& a, const RadialProfile& b);

double pearson(std::span<const double> a, std::span<const double> b);
/// Rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);
/// Slope and intercept of least squares y = a x + b.
std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y);
double median(std::vector<double> v);

/// Uniform grid of `count` values on [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t count);

/// Images of the oracle renderer for each radius, stacked (radii x m*m).
std::vector<double> oracle_images(std::span<const double> radii, std::size_t m, double sigma,
                                  int threads = 1);

struct LatentCurve {
  std::vector<double> radii;
  std::vector<double> codes;
  double beta = 0.0;      // |z| ~ r^beta fitted on r in [4, 28]
  double spearman = 0.0;  // between r and z over the whole grid
};

LatentCurve latent_curve(const Network& encoder, std::span<const double> radii,
                         double sigma = kDefaultBlurSigma, int threads = 1);

struct RadiusError {
  double radius = 0.0;
  double mse = 0.0;          // per-image squared error
  double target_mass = 0.0;
  double output_mass = 0.0;
  bool excluded = false;
};

/// Reconstruction error of encoder + decoder on fresh oracle disks.
std::vector<RadiusError> error_by_radius(const Network& encoder, const Network& decoder,
                                         std::span<const double> radii,
                                         std::span<const Interval> exclusions = {},
                                         double sigma = kDefaultBlurSigma, int threads = 1);

/// Decoder outputs for the given codes, stacked (codes x output size).
std::vector<double> decode_codes(const Network& decoder, std::span<const double> codes);

}  // namespace geoae
