// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "geoae/checkpoint.hpp"
#include "geoae/errors.hpp"
#include "geoae/network.hpp"
#include "geoae/ops.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace geoae {
namespace {

namespace fs = std::filesystem;
using testing::random_tensor;

// Straight-line reference: loops over output positions and taps directly.
double act(double v, double alpha) { return v >= 0.0 ? v : alpha * v; }

double in_at(const Tensor& x, std::size_t n, std::size_t c, long y, long xx, std::size_t h,
             std::size_t w) {
  if (y < 0 || xx < 0 || y >= static_cast<long>(h) || xx >= static_cast<long>(w)) return 0.0;
  const std::size_t cs = x.extent(1);
  return x[((n * cs + c) * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(xx)];
}

Tensor reference_down_2d(const Tensor& x, const ConvParams& p, double alpha) {
  const std::size_t nb = x.extent(0), ci = x.extent(1), h = x.extent(2), w = x.extent(3);
  const std::size_t co = p.out_channels(), ho = h / 2, wo = w / 2;
  Tensor out({nb, co, ho, wo});
  for (std::size_t n = 0; n < nb; ++n)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t ty = 0; ty < ho; ++ty)
        for (std::size_t tx = 0; tx < wo; ++tx) {
          double s = p.bias ? (*p.bias)[o] : 0.0;
          for (std::size_t ky = 0; ky < 3; ++ky)
            for (std::size_t kx = 0; kx < 3; ++kx)
              for (std::size_t c = 0; c < ci; ++c) {
                const long y = 2 * static_cast<long>(ty) + static_cast<long>(ky) - 1;
                const long xx = 2 * static_cast<long>(tx) + static_cast<long>(kx) - 1;
                s += p.weights[((ky * 3 + kx) * ci + c) * co + o] * in_at(x, n, c, y, xx, h, w);
              }
          out[((n * co + o) * ho + ty) * wo + tx] = act(s, alpha);
        }
  return out;
}

// Zero insertion then a stride-1 convolution, written out for 2D.
Tensor reference_up_2d(const Tensor& x, const ConvParams& p, double alpha) {
  const std::size_t nb = x.extent(0), ci = x.extent(1), h = x.extent(2), w = x.extent(3);
  Tensor u({nb, ci, 2 * h, 2 * w});
  for (std::size_t n = 0; n < nb; ++n)
    for (std::size_t c = 0; c < ci; ++c)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t xx = 0; xx < w; ++xx)
          u[((n * ci + c) * 2 * h + 2 * y) * 2 * w + 2 * xx] = x[((n * ci + c) * h + y) * w + xx];
  const std::size_t co = p.out_channels(), H = 2 * h, W = 2 * w;
  Tensor out({nb, co, H, W});
  for (std::size_t n = 0; n < nb; ++n)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t ty = 0; ty < H; ++ty)
        for (std::size_t tx = 0; tx < W; ++tx) {
          double s = p.bias ? (*p.bias)[o] : 0.0;
          for (std::size_t ky = 0; ky < 3; ++ky)
            for (std::size_t kx = 0; kx < 3; ++kx)
              for (std::size_t c = 0; c < ci; ++c) {
                const long y = static_cast<long>(ty + ky) - 1;
                const long xx = static_cast<long>(tx + kx) - 1;
                s += p.weights[((ky * 3 + kx) * ci + c) * co + o] * in_at(u, n, c, y, xx, H, W);
              }
          out[((n * co + o) * H + ty) * W + tx] = act(s, alpha);
        }
  return out;
}

void randomise_biases(Network& net, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 0.2);
  for (ConvParams& p : net.layers()) {
    if (p.bias) {
      for (double& b : p.bias->data()) b = d(rng);
    }
  }
}

double max_rel(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::max(std::abs(a[i]), std::abs(b[i]));
    if (d > 0.0) worst = std::max(worst, std::abs(a[i] - b[i]) / d);
  }
  return worst;
}

// ---- build -------------------------------------------------------------------

TEST(Build, DiskEncoderParameterCount) {
  EXPECT_EQ(Network::build(disk_encoder_spec(true), 0).parameter_count(), 706u);
  EXPECT_EQ(Network::build(disk_encoder_spec(false), 0).parameter_count(), 684u);
}

TEST(Build, DecoderAndPositionParameterCounts) {
  // 9 * (2 + 6 + 12 + 16 + 32 + 8) weights plus 22 biases.
  EXPECT_EQ(Network::build(disk_decoder_spec(true), 0).parameter_count(), 9u * 76 + 22);
  EXPECT_EQ(Network::build(disk_decoder_spec(false), 0).parameter_count(), 9u * 76);
  EXPECT_EQ(Network::build(position_encoder_spec(true), 0).parameter_count(), 6u * 4);
  // 3 * (8 + 32 + 16 + 16 + 8 + 2) weights plus 23 biases.
  EXPECT_EQ(Network::build(position_decoder_spec(true), 0).parameter_count(), 3u * 82 + 23);
}

TEST(Build, SameSeedSameParameters) {
  const Network a = Network::build(disk_encoder_spec(true), 42);
  const Network b = Network::build(disk_encoder_spec(true), 42);
  const Network c = Network::build(disk_encoder_spec(true), 43);
  EXPECT_EQ(a.flat_parameters(), b.flat_parameters());
  EXPECT_NE(a.flat_parameters(), c.flat_parameters());
}

TEST(Build, BiasFreeLayersHaveNoBias) {
  const Network net = Network::build(disk_decoder_spec(false), 1);
  for (const ConvParams& p : net.layers()) EXPECT_FALSE(p.bias.has_value());
}

TEST(Build, RejectsBrokenChainNamingTheLayer) {
  NetworkSpec spec = disk_encoder_spec(true);
  spec.layers[3].in_channels = 5;
  try {
    Network::build(spec, 0);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("layer 3"), std::string::npos) << e.what();
  }
}

TEST(Build, ShapesChainBothWays) {
  const NetworkSpec enc = disk_encoder_spec(true);
  const NetworkSpec dec = disk_decoder_spec(true);
  EXPECT_EQ(enc.output_shape(), dec.input_shape);
  EXPECT_EQ(dec.output_shape(), enc.input_shape);
  EXPECT_EQ(position_encoder_spec(true).output_shape(), position_decoder_spec(true).input_shape);
  EXPECT_EQ(position_decoder_spec(true).output_shape(), (Shape{1, 64}));
}

TEST(Build, PositionDecoderWidestNearTheCode) {
  const NetworkSpec spec = position_decoder_spec(true);
  const std::vector<std::size_t> out{8, 4, 4, 4, 2, 1};
  ASSERT_EQ(spec.layers.size(), out.size());
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(spec.layers[i].out_channels, out[i]);
}

// ---- encode / decode ---------------------------------------------------------

TEST(Encode, ZeroImageThroughBiasFreeEncoderIsZero) {
  const Network enc = Network::build(disk_encoder_spec(false), 3);
  EXPECT_EQ(encode(enc, Tensor({1, 1, 64, 64}))[0], 0.0);
}

TEST(Encode, MatchesStraightLineEvaluation) {
  std::mt19937_64 rng(4);
  Network enc = Network::build(disk_encoder_spec(true), 4);
  randomise_biases(enc, rng);
  const Tensor x = random_tensor({2, 1, 64, 64}, rng);
  Tensor ref = x;
  for (const ConvParams& p : enc.layers()) ref = reference_down_2d(ref, p, 0.2);
  const Tensor z = encode(enc, x);
  ASSERT_EQ(z.size(), 2u);
  EXPECT_LT(max_rel(z, ref), 1e-12);
}

TEST(Encode, RejectsWrongShape) {
  const Network enc = Network::build(disk_encoder_spec(true), 0);
  EXPECT_THROW(encode(enc, Tensor({1, 1, 32, 32})), std::invalid_argument);
}

TEST(Decode, MatchesStraightLineEvaluation) {
  std::mt19937_64 rng(5);
  Network dec = Network::build(disk_decoder_spec(true), 5);
  randomise_biases(dec, rng);
  const Tensor z({3, 1}, {-0.7, 0.2, 1.3});
  Tensor ref({3, 1, 1, 1}, {-0.7, 0.2, 1.3});
  for (const ConvParams& p : dec.layers()) ref = reference_up_2d(ref, p, 0.2);
  EXPECT_LT(max_rel(decode(dec, z), ref), 1e-12);
}

TEST(Decode, ZeroCodeThroughBiasFreeDecoderIsZero) {
  const Network dec = Network::build(disk_decoder_spec(false), 6);
  for (double v : decode(dec, Tensor({1, 1})).data()) EXPECT_EQ(v, 0.0);
}

TEST(Decode, BiasFreeDecoderIsPositivelyHomogeneous) {
  const Network dec = Network::build(disk_decoder_spec(false), 7);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> loglam(std::log(1e-2), std::log(1e2));
  for (double z : {0.8, -1.7}) {
    const Tensor base = decode(dec, Tensor({1, 1}, {z}));
    for (int t = 0; t < 50; ++t) {
      const double lam = std::exp(loglam(rng));
      const Tensor scaled = decode(dec, Tensor({1, 1}, {lam * z}));
      Tensor expect = base;
      for (double& v : expect.data()) v *= lam;
      EXPECT_LE(max_rel(scaled, expect), 1e-9);
    }
  }
}

TEST(Decode, BiasFreeDecoderIsAdditiveForSameSignCodes) {
  const Network dec = Network::build(disk_decoder_spec(false), 8);
  const Tensor a = decode(dec, Tensor({1, 1}, {0.3}));
  const Tensor b = decode(dec, Tensor({1, 1}, {1.9}));
  Tensor sum = a;
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += b[i];
  EXPECT_LE(max_rel(decode(dec, Tensor({1, 1}, {2.2})), sum), 1e-9);
}

TEST(Decode, BiasBreaksHomogeneity) {
  std::mt19937_64 rng(9);
  Network dec = Network::build(disk_decoder_spec(true), 9);
  randomise_biases(dec, rng);
  const Tensor a = decode(dec, Tensor({1, 1}, {1.0}));
  Tensor twice = a;
  for (double& v : twice.data()) v *= 2.0;
  EXPECT_GT(max_rel(decode(dec, Tensor({1, 1}, {2.0})), twice), 1e-3);
}

// ---- hand-crafted position encoder --------------------------------------------

double handcrafted(int levels, std::size_t position, double scale = 1.0) {
  const Network net = build_handcrafted_position_encoder(levels, scale);
  Tensor x({1, 1, std::size_t{1} << levels});
  x[position] = 1.0;
  return net.forward(x)[0];
}

TEST(Handcrafted, SmallExamples) {
  EXPECT_EQ(handcrafted(2, 0), 4.0);
  EXPECT_EQ(handcrafted(3, 3), 5.0);
  EXPECT_EQ(handcrafted(3, 7), 1.0);
}

TEST(Handcrafted, LevelThreeTable) {
  for (std::size_t a = 0; a < 8; ++a) EXPECT_EQ(handcrafted(3, a), 8.0 - static_cast<double>(a));
}

TEST(Handcrafted, ExactForEveryPositionUpToSixLevels) {
  for (int levels = 1; levels <= 6; ++levels) {
    const std::size_t n = std::size_t{1} << levels;
    for (std::size_t a = 0; a < n; ++a) {
      EXPECT_EQ(handcrafted(levels, a), static_cast<double>(n - a)) << levels << " " << a;
    }
  }
}

TEST(Handcrafted, IsLinearWithoutBias) {
  const Network net = build_handcrafted_position_encoder(4);
  EXPECT_EQ(net.parameter_count(), 12u);
  for (const LayerSpec& l : net.spec().layers) {
    EXPECT_FALSE(l.has_bias);
    EXPECT_EQ(l.alpha, 1.0);
  }
  // Sum of one-hots maps to the sum of their codes.
  Tensor x({1, 1, 16});
  x[2] = 1.0;
  x[9] = 1.0;
  EXPECT_EQ(net.forward(x)[0], 14.0 + 7.0);
}

TEST(Handcrafted, ScaledFilterScalesByPowerOfLevels) {
  const double b = 1.5;
  for (std::size_t a = 0; a < 64; ++a) {
    EXPECT_DOUBLE_EQ(handcrafted(6, a, b), std::pow(b, 6) * (64.0 - static_cast<double>(a)));
  }
  // Ranking is preserved for positive b.
  for (std::size_t a = 1; a < 64; ++a) EXPECT_GT(handcrafted(6, a - 1, 0.3), handcrafted(6, a, 0.3));
}

TEST(Handcrafted, StrideOneLosesPositions) {
  // Without subsampling, reading the first output after L [1, 2, 1] passes
  // only sees the first L + 1 positions.
  ConvParams p = ConvParams::zeros(1, 1, 1, false);
  p.weights[0] = 1.0;
  p.weights[1] = 2.0;
  p.weights[2] = 1.0;
  std::set<double> codes;
  for (std::size_t a = 0; a < 64; ++a) {
    Tensor x({1, 1, 64});
    x[a] = 1.0;
    for (int l = 0; l < 6; ++l) x = conv_forward(x, p, 1, 1);
    codes.insert(x[0]);
  }
  EXPECT_LT(codes.size(), 64u);
}

TEST(ClosedForm, Values) {
  EXPECT_EQ(position_encode_closed_form(0, 3), 8.0);
  EXPECT_EQ(position_encode_closed_form(4, 3), 4.0);
  EXPECT_EQ(position_encode_closed_form(63, 6), 1.0);
}

TEST(ClosedForm, RejectsOutOfRange) {
  EXPECT_THROW(position_encode_closed_form(8, 3), std::invalid_argument);
  EXPECT_THROW(position_encode_closed_form(-1, 3), std::invalid_argument);
}

// ---- checkpoint --------------------------------------------------------------

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("geoae_ckpt_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(CheckpointTest, RoundTripIsExact) {
  std::mt19937_64 rng(10);
  Network enc = Network::build(disk_encoder_spec(true), 10);
  randomise_biases(enc, rng);
  Checkpoint c;
  c.networks = {enc, Network::build(disk_decoder_spec(false), 11)};
  c.seed = 12345;
  c.train_config_hash = "abcdef0123456789";
  c.metadata = R"({"suite":"x","max_radius":18.0})";
  save_checkpoint(c, dir_ / "m.ckpt");
  const Checkpoint back = load_checkpoint(dir_ / "m.ckpt");
  ASSERT_EQ(back.networks.size(), 2u);
  EXPECT_TRUE(back.networks[0] == c.networks[0]);
  EXPECT_TRUE(back.networks[1] == c.networks[1]);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.train_config_hash, c.train_config_hash);
  EXPECT_EQ(nlohmann::json::parse(back.metadata), nlohmann::json::parse(c.metadata));
}

TEST_F(CheckpointTest, RejectsCorruptedFiles) {
  Checkpoint c;
  c.networks = {Network::build(position_encoder_spec(true), 1)};
  const fs::path good = dir_ / "good.ckpt";
  save_checkpoint(c, good);
  std::string bytes;
  {
    std::ifstream in(good, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << content;
    return dir_ / name;
  };
  EXPECT_THROW(load_checkpoint(write("short.ckpt", bytes.substr(0, bytes.size() - 3))), ConfigError);
  EXPECT_THROW(load_checkpoint(write("long.ckpt", bytes + "xxxxxxxx")), ConfigError);
  EXPECT_THROW(load_checkpoint(write("header.ckpt", "{not json\n" + bytes)), ConfigError);
  EXPECT_THROW(load_checkpoint(dir_ / "missing.ckpt"), std::exception);
}

}  // namespace
}  // namespace geoae
