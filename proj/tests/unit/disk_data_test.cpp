// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "geoae/disk_data.hpp"
#include "geoae/errors.hpp"
#include "geoae/io.hpp"

namespace geoae {
namespace {

constexpr std::size_t kN = kDefaultMcSamples;
const double kMcTol = 3.0 / std::sqrt(static_cast<double>(kN));

TEST(RenderDiskMc, CentreAndCorner) {
  EXPECT_EQ(render_disk_mc(10.0, 64, 1.0, kN, 1).at(31, 32), 1.0);
  EXPECT_EQ(render_disk_mc(4.0, 64, 1.0, kN, 1).at(0, 0), 0.0);
  EXPECT_EQ(render_disk_mc(4.0, 64, 1.0, kN, 1).at(63, 63), 0.0);
}

TEST(RenderDiskMc, BoundaryPixelIsHalf) {
  // Pixel (31, 63) lies at distance sqrt(31.5^2 + 0.5^2) from the centre.
  const double r = std::hypot(31.5, 0.5);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    EXPECT_NEAR(render_disk_mc(r, 64, 1.0, kN, seed).at(31, 63), 0.5, kMcTol);
  }
}

TEST(RenderDiskMc, ValuesInUnitInterval) {
  const DiskImage img = render_disk_mc(13.3, 64, 1.0, kN, 5);
  for (double v : img.pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(RenderDiskMc, RejectsRadiusOutsideRange) {
  EXPECT_THROW(render_disk_mc(0.0, 64, 1.0, kN, 1), ConfigError);
  EXPECT_THROW(render_disk_mc(32.01, 64, 1.0, kN, 1), ConfigError);
  EXPECT_THROW(render_disk_mc(5.0, 64, 1.0, 0, 1), ConfigError);
  EXPECT_THROW(render_disk_oracle(-1.0, 64, 1.0), ConfigError);
}

TEST(RenderDiskMc, AgreesWithOracleOnRandomSuite) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> radius(0.5, 32.0);
  const double tol = 4.0 / std::sqrt(static_cast<double>(kN));
  for (int c = 0; c < 20; ++c) {
    const double r = radius(rng);
    const std::uint64_t seed = rng();
    const DiskImage mc = render_disk_mc(r, 64, 1.0, kN, seed);
    const DiskImage oracle = render_disk_oracle(r, 64, 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < mc.pixels.size(); ++i) {
      worst = std::max(worst, std::abs(mc.pixels[i] - oracle.pixels[i]));
    }
    EXPECT_LE(worst, tol) << "r=" << r << " seed=" << seed;
  }
}

TEST(RenderDiskMc, PixelwiseMonotoneInRadius) {
  const DiskImage small = render_disk_mc(9.0, 64, 1.0, kN, 11);
  const DiskImage large = render_disk_mc(9.4, 64, 1.0, kN, 29);
  for (std::size_t i = 0; i < small.pixels.size(); ++i) {
    EXPECT_LE(small.pixels[i], large.pixels[i] + kMcTol);
  }
}

TEST(RenderDiskMc, MassStrictlyIncreasingAndCloseToArea) {
  double previous = -1.0;
  for (int k = 0; k < 50; ++k) {
    const double r = 0.6 + 31.4 * k / 49.0;
    const double mass = render_disk_mc(r, 64, 1.0, kN, 99).mass();
    EXPECT_GT(mass, previous) << "r=" << r;
    previous = mass;
    if (r >= 3.0 && r <= 28.0) {
      const double area = std::numbers::pi * r * r;
      EXPECT_NEAR(mass / area, 1.0, 0.05) << "r=" << r;
    }
  }
}

TEST(RenderDiskOracle, CentrePixelAtLargestRadius) {
  const DiskImage img = render_disk_oracle(32.0, 64, 1.0);
  EXPECT_NEAR(img.at(31, 31), 1.0, 1e-12);
  EXPECT_NEAR(img.at(32, 32), 1.0, 1e-12);
}

TEST(RenderDiskOracle, InvariantUnderSquareSymmetries) {
  for (double r : {3.37, 12.81, 25.06}) {
    const DiskImage img = render_disk_oracle(r, 64, 1.0);
    const std::size_t m = img.m;
    double worst = 0.0;
    for (std::size_t y = 0; y < m; ++y) {
      for (std::size_t x = 0; x < m; ++x) {
        const double v = img.at(y, x);
        const std::size_t fy = m - 1 - y, fx = m - 1 - x;
        for (double w : {img.at(x, y), img.at(fy, x), img.at(y, fx), img.at(fy, fx),
                         img.at(fx, y), img.at(x, fy), img.at(fx, fy)}) {
          worst = std::max(worst, std::abs(v - w));
        }
      }
    }
    EXPECT_LE(worst, 1e-6) << "r=" << r;
  }
}

TEST(RenderDiskOracle, MatchesBruteForceTwoDimensionalSum) {
  // Direct double loop over the same offset grid, for a handful of pixels.
  const double r = 7.3, sigma = 1.0;
  const std::size_t sub = 8;
  const DiskImage img = render_disk_oracle(r, 16, sigma, sub);
  const double h = 1.0 / sub;
  const auto count = static_cast<std::size_t>(std::ceil(12.0 * sigma / h));
  const double start = -0.5 * count * h;
  std::vector<double> off(count), w(count);
  double total = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    off[k] = start + (k + 0.5) * h;
    w[k] = std::exp(-0.5 * off[k] * off[k]);
    total += w[k];
  }
  for (auto [y, x] : {std::pair<std::size_t, std::size_t>{7, 14}, {2, 3}, {7, 8}, {0, 7}}) {
    const double dy = y - 7.5, dx = x - 7.5;
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = 0; j < count; ++j) {
        const double px = dx + off[i], py = dy + off[j];
        if (px * px + py * py <= r * r) sum += w[i] * w[j];
      }
    }
    EXPECT_NEAR(img.at(y, x), sum / (total * total), 1e-12) << y << "," << x;
  }
}

TEST(RenderDirac, Examples) {
  const DiracSignal five = render_dirac(5.0, 64);
  for (std::size_t t = 0; t < 64; ++t) EXPECT_EQ(five.samples[t], t == 5 ? 1.0 : 0.0);
  const DiracSignal half = render_dirac(3.5, 64);
  for (std::size_t t = 0; t < 64; ++t) {
    EXPECT_EQ(half.samples[t], (t == 3 || t == 4) ? 0.5 : 0.0);
  }
  const DiracSignal zero = render_dirac(0.0, 64);
  EXPECT_EQ(zero.samples[0], 1.0);
  EXPECT_EQ(std::accumulate(zero.samples.begin(), zero.samples.end(), 0.0), 1.0);
  EXPECT_THROW(render_dirac(63.5, 64), ConfigError);
}

TEST(RenderDirac, PartitionOfUnityAwayFromEnds) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(1.0, 62.0);
  for (int i = 0; i < 1000; ++i) {
    const DiracSignal s = render_dirac(pos(rng), 64);
    int nonzero = 0;
    double sum = 0.0;
    for (double v : s.samples) {
      nonzero += v != 0.0;
      sum += v;
    }
    EXPECT_LE(nonzero, 2);
    EXPECT_NEAR(sum, 1.0, 1e-15);
  }
}

TEST(SampleParameter, DefaultSupport) {
  const DatasetSpec spec = DatasetSpec::disks(10, 0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double v = sample_parameter(spec, rng);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 32.0);
  }
}

TEST(SampleParameter, HoleIsNeverSampled) {
  DatasetSpec spec = DatasetSpec::disks(10, 0);
  spec.exclusions = {{11.0, 18.0}};
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100000; ++i) {
    const double v = sample_parameter(spec, rng);
    ASSERT_FALSE(v >= 11.0 && v <= 18.0) << v;
  }
}

TEST(SampleParameter, RestrictedRadiusStaysBelowCap) {
  DatasetSpec spec = DatasetSpec::disks(10, 0);
  spec.exclusions = {{18.0, 32.0}};
  std::mt19937_64 rng(3);
  double hi = 0.0;
  for (int i = 0; i < 100000; ++i) hi = std::max(hi, sample_parameter(spec, rng));
  EXPECT_LE(hi, 18.0);
}

TEST(DatasetSpec, RejectsEmptyOrInconsistent) {
  DatasetSpec spec = DatasetSpec::disks(0, 1);
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = DatasetSpec::disks(10, 1);
  spec.exclusions = {{0.5, 20.0}, {15.0, 32.0}};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.exclusions = {{20.0, 40.0}};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.exclusions = {{5.0, 4.0}};
  EXPECT_THROW(spec.validate(), ConfigError);
  EXPECT_THROW(signal_kind_from_string("squares"), ConfigError);
}

TEST(BuildDataset, ShapesSplitsAndDeterminism) {
  DatasetSpec spec = DatasetSpec::disks(40, 17);
  spec.mc_samples = 256;
  spec.exclusions = {{11.0, 18.0}};
  const Dataset a = build_dataset(spec, 1);
  const Dataset b = build_dataset(spec, 3);
  EXPECT_EQ(a.size(), 40u);
  EXPECT_EQ(a.signals.size(), 40u * 64 * 64);
  EXPECT_EQ(a.holdout_indices.size(), 4u);
  EXPECT_EQ(a.train_indices.size(), 36u);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.signals, b.signals);
  EXPECT_EQ(a.train_indices, b.train_indices);
  for (double r : a.params) EXPECT_FALSE(r >= 11.0 && r <= 18.0);
  // Each sample equals a standalone render.
  const DiskImage img = render_disk_mc(a.params[7], 64, 1.0, 256, sample_seed(17, 7));
  EXPECT_TRUE(std::equal(img.pixels.begin(), img.pixels.end(), a.signal(7)));
  EXPECT_THROW(build_dataset(DatasetSpec::disks(0, 1)), ConfigError);
}

TEST(BuildDataset, SaveLoadVerifyRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "geoae_dataset_roundtrip";
  std::filesystem::remove_all(dir);
  DatasetSpec spec = DatasetSpec::diracs(50, 9);
  const Dataset ds = build_dataset(spec);
  save_dataset(ds, dir);
  const Dataset back = load_dataset(dir);
  EXPECT_EQ(back.spec, ds.spec);
  EXPECT_EQ(back.params, ds.params);
  EXPECT_EQ(back.signals, ds.signals);
  EXPECT_TRUE(verify_dataset(dir));
  // Second save of the same spec is byte identical.
  const auto dir2 = dir.string() + "_2";
  save_dataset(build_dataset(spec), dir2);
  for (const char* f : {"manifest.json", "train.f64", "holdout.f64"}) {
    EXPECT_EQ(read_text(dir / f), read_text(std::filesystem::path(dir2) / f)) << f;
  }
  // Tampering is detected.
  std::vector<double> train = read_f64(dir / "train.f64");
  train[3] += 1.0;
  write_f64(dir / "train.f64", train);
  EXPECT_FALSE(verify_dataset(dir));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

}  // namespace
}  // namespace geoae
