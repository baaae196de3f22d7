// SPDX-License-Identifier: Apache-2.0
#include "geoae/disk_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geoae/errors.hpp"
#include "geoae/io.hpp"
#include "geoae/parallel.hpp"
#include "json.hpp"

namespace geoae {

using nlohmann::json;

double DiskImage::mass() const { return std::accumulate(pixels.begin(), pixels.end(), 0.0); }

std::string to_string(SignalKind kind) {
  return kind == SignalKind::kDisks ? "disks" : "diracs";
}

SignalKind signal_kind_from_string(const std::string& s) {
  if (s == "disks") return SignalKind::kDisks;
  if (s == "diracs") return SignalKind::kDiracs;
  throw ConfigError("unknown signal kind '" + s + "' (expected disks or diracs)");
}

DatasetSpec DatasetSpec::disks(std::size_t count, std::uint64_t seed) {
  DatasetSpec s;
  s.count = count;
  s.seed = seed;
  return s;
}

DatasetSpec DatasetSpec::diracs(std::size_t count, std::uint64_t seed) {
  DatasetSpec s;
  s.kind = SignalKind::kDiracs;
  s.count = count;
  s.seed = seed;
  s.extent = kSignalLength;
  s.support_low = 0.0;
  s.support_high = static_cast<double>(kSignalLength - 1);
  return s;
}

std::size_t DatasetSpec::sample_size() const {
  return kind == SignalKind::kDisks ? extent * extent : extent;
}

void DatasetSpec::validate() const {
  if (count == 0) throw ConfigError("dataset count must be positive");
  if (extent < 2) throw ConfigError("signal extent must be at least 2");
  if (!(support_low < support_high)) throw ConfigError("empty parameter support");
  if (kind == SignalKind::kDisks) {
    if (support_low < 0.0 || support_high > static_cast<double>(extent) / 2.0) {
      throw ConfigError("disk radii must lie in (0, m/2]");
    }
    if (!(sigma > 0.0)) throw ConfigError("blur sigma must be positive");
    if (mc_samples == 0) throw ConfigError("Monte Carlo sample count must be positive");
  } else if (support_low < 0.0 || support_high > static_cast<double>(extent - 1)) {
    throw ConfigError("Dirac positions must lie in [0, n-1]");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in [0, 1)");
  }
  // Remaining measure of the support after removing the exclusions.
  std::vector<Interval> ex = exclusions;
  for (const Interval& e : ex) {
    if (!(e.low <= e.high)) throw ConfigError("exclusion interval has low > high");
    if (e.low < support_low || e.high > support_high) {
      throw ConfigError("exclusion [" + format_double(e.low) + ", " + format_double(e.high) +
                        "] lies outside the support");
    }
  }
  std::sort(ex.begin(), ex.end(), [](const Interval& a, const Interval& b) { return a.low < b.low; });
  double covered = 0.0, reach = support_low;
  for (const Interval& e : ex) {
    const double lo = std::max(e.low, reach);
    if (e.high > lo) covered += e.high - lo;
    reach = std::max(reach, e.high);
  }
  if (covered >= (support_high - support_low) * (1.0 - 1e-12)) {
    throw ConfigError("exclusions cover the whole parameter support");
  }
}

DiskImage render_disk_mc(double radius, std::size_t m, double sigma, std::size_t samples,
                         std::uint64_t seed) {
  if (!(radius > 0.0 && radius <= static_cast<double>(m) / 2.0)) {
    throw ConfigError("radius " + format_double(radius) + " outside (0, m/2]");
  }
  if (samples == 0 || !(sigma > 0.0)) throw ConfigError("need sigma > 0 and N >= 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<double> ox(samples), oy(samples);
  double max_norm = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    ox[i] = normal(rng);
    oy[i] = normal(rng);
    max_norm = std::max(max_norm, std::hypot(ox[i], oy[i]));
  }

  DiskImage img{radius, m, std::vector<double>(m * m, 0.0)};
  const double c = (static_cast<double>(m) - 1.0) / 2.0;
  const double r2 = radius * radius;
  const double inv = 1.0 / static_cast<double>(samples);
  for (std::size_t y = 0; y < m; ++y) {
    const double dy = static_cast<double>(y) - c;
    for (std::size_t x = 0; x < m; ++x) {
      const double dx = static_cast<double>(x) - c;
      const double d = std::hypot(dx, dy);
      // Every probe lies within max_norm of the pixel centre.
      if (d + max_norm < radius) {
        img.pixels[y * m + x] = 1.0;
        continue;
      }
      if (d - max_norm > radius) continue;
      std::size_t inside = 0;
      for (std::size_t i = 0; i < samples; ++i) {
        const double px = dx + ox[i];
        const double py = dy + oy[i];
        inside += (px * px + py * py <= r2) ? 1u : 0u;
      }
      img.pixels[y * m + x] = static_cast<double>(inside) * inv;
    }
  }
  return img;
}

DiskImage render_disk_oracle(double radius, std::size_t m, double sigma,
                             std::size_t subsamples_per_pixel) {
  if (!(radius > 0.0 && radius <= static_cast<double>(m) / 2.0)) {
    throw ConfigError("radius " + format_double(radius) + " outside (0, m/2]");
  }
  if (!(sigma > 0.0) || subsamples_per_pixel == 0) {
    throw ConfigError("need sigma > 0 and a positive sub-sample count");
  }
  // Symmetric midpoint grid of offsets on [-6 sigma, 6 sigma].
  const double half_width = 6.0 * sigma;
  const double h = 1.0 / static_cast<double>(subsamples_per_pixel);
  const auto count = static_cast<std::size_t>(std::ceil(2.0 * half_width / h));
  const double start = -0.5 * static_cast<double>(count) * h;
  std::vector<double> offset(count), weight(count);
  for (std::size_t k = 0; k < count; ++k) {
    offset[k] = start + (static_cast<double>(k) + 0.5) * h;
    weight[k] = std::exp(-0.5 * offset[k] * offset[k] / (sigma * sigma));
  }
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  for (double& w : weight) w /= total;
  std::vector<double> prefix(count + 1, 0.0);
  for (std::size_t k = 0; k < count; ++k) prefix[k + 1] = prefix[k] + weight[k];

  // The 2D weighted sum over the offset grid factorises per row: for a fixed
  // horizontal offset the admissible vertical offsets form one contiguous run.
  const double reach = -start * std::sqrt(2.0);
  DiskImage img{radius, m, std::vector<double>(m * m, 0.0)};
  const double c = (static_cast<double>(m) - 1.0) / 2.0;
  const double r2 = radius * radius;
  const auto last = static_cast<std::ptrdiff_t>(count) - 1;
  for (std::size_t y = 0; y < m; ++y) {
    const double dy = static_cast<double>(y) - c;
    for (std::size_t x = 0; x < m; ++x) {
      const double dx = static_cast<double>(x) - c;
      const double d = std::hypot(dx, dy);
      if (d + reach < radius) {
        img.pixels[y * m + x] = 1.0;
        continue;
      }
      if (d - reach > radius) continue;
      double value = 0.0;
      for (std::size_t k = 0; k < count; ++k) {
        const double u = dx + offset[k];
        const double rem = r2 - u * u;
        if (rem < 0.0) continue;
        const double chord = std::sqrt(rem);
        // Vertical offsets s with |dy + s| <= chord.
        const double lo = (-chord - dy - start) / h - 0.5;
        const double hi = (chord - dy - start) / h - 0.5;
        const auto j_lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(lo)));
        const auto j_hi = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(std::floor(hi)));
        if (j_lo > j_hi) continue;
        value += weight[k] * (prefix[static_cast<std::size_t>(j_hi) + 1] -
                              prefix[static_cast<std::size_t>(j_lo)]);
      }
      img.pixels[y * m + x] = std::clamp(value, 0.0, 1.0);
    }
  }
  return img;
}

DiracSignal render_dirac(double position, std::size_t n) {
  if (!(position >= 0.0 && position <= static_cast<double>(n) - 1.0)) {
    throw ConfigError("Dirac position " + format_double(position) + " outside [0, n-1]");
  }
  DiracSignal s{position, std::vector<double>(n, 0.0)};
  for (std::size_t t = 0; t < n; ++t) {
    const double d = std::abs(static_cast<double>(t) - position);
    if (d < 1.0) s.samples[t] = 1.0 - d;
  }
  return s;
}

double sample_parameter(const DatasetSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  std::uniform_real_distribution<double> dist(spec.support_low, spec.support_high);
  for (;;) {
    const double v = dist(rng);
    const bool excluded = std::any_of(spec.exclusions.begin(), spec.exclusions.end(),
                                      [v](const Interval& e) { return e.contains(v); });
    if (!excluded) return v;
  }
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t index) {
  return mix_seed(seed, static_cast<std::uint64_t>(index));
}

namespace {

void render_into(const DatasetSpec& spec, std::size_t index, double param, double* dst) {
  if (spec.kind == SignalKind::kDisks) {
    const DiskImage img = render_disk_mc(param, spec.extent, spec.sigma, spec.mc_samples,
                                         sample_seed(spec.seed, index));
    std::copy(img.pixels.begin(), img.pixels.end(), dst);
  } else {
    const DiracSignal s = render_dirac(param, spec.extent);
    std::copy(s.samples.begin(), s.samples.end(), dst);
  }
}

}  // namespace

Dataset build_dataset(const DatasetSpec& spec, int threads) {
  spec.validate();
  Dataset ds;
  ds.spec = spec;
  std::mt19937_64 rng(spec.seed);
  ds.params.resize(spec.count);
  for (double& p : ds.params) p = sample_parameter(spec, rng);

  const std::size_t len = spec.sample_size();
  ds.signals.assign(spec.count * len, 0.0);
  parallel_for(spec.count, threads, [&](std::size_t i) {
    render_into(spec, i, ds.params[i], ds.signals.data() + i * len);
  });

  std::vector<std::size_t> order(spec.count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(sample_seed(spec.seed, static_cast<std::size_t>(-1)));
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_hold = static_cast<std::size_t>(
      std::llround(spec.holdout_fraction * static_cast<double>(spec.count)));
  ds.holdout_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
  ds.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());
  std::sort(ds.holdout_indices.begin(), ds.holdout_indices.end());
  std::sort(ds.train_indices.begin(), ds.train_indices.end());
  return ds;
}

namespace {

json manifest_of(const Dataset& ds) {
  const DatasetSpec& s = ds.spec;
  json j;
  j["kind"] = to_string(s.kind);
  j[s.kind == SignalKind::kDisks ? "m" : "n"] = s.extent;
  j["sigma"] = s.sigma;
  j["mc_samples"] = s.mc_samples;
  j["seed"] = s.seed;
  j["exclusions"] = json::array();
  for (const Interval& e : s.exclusions) j["exclusions"].push_back({e.low, e.high});
  j["params"] = ds.params;
  j["count"] = s.count;
  j["support"] = {s.support_low, s.support_high};
  j["holdout_fraction"] = s.holdout_fraction;
  j["splits"] = {{"train", ds.train_indices}, {"holdout", ds.holdout_indices}};
  j["format"] = "float64-le";
  return j;
}

DatasetSpec spec_of(const json& j) {
  DatasetSpec s;
  s.kind = signal_kind_from_string(j.at("kind").get<std::string>());
  s.extent = j.at(s.kind == SignalKind::kDisks ? "m" : "n").get<std::size_t>();
  s.sigma = j.at("sigma").get<double>();
  s.mc_samples = j.at("mc_samples").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& e : j.at("exclusions")) {
    s.exclusions.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  }
  s.count = j.at("count").get<std::size_t>();
  s.support_low = j.at("support").at(0).get<double>();
  s.support_high = j.at("support").at(1).get<double>();
  s.holdout_fraction = j.at("holdout_fraction").get<double>();
  s.validate();
  return s;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "manifest.json", manifest_of(ds).dump(1) + "\n");
  const std::size_t len = ds.sample_size();
  auto write_split = [&](const std::vector<std::size_t>& idx, const char* name) {
    std::vector<double> flat;
    flat.reserve(idx.size() * len);
    for (std::size_t i : idx) flat.insert(flat.end(), ds.signal(i), ds.signal(i) + len);
    write_f64(dir / name, flat);
  };
  write_split(ds.train_indices, "train.f64");
  write_split(ds.holdout_indices, "holdout.f64");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw ConfigError((dir / "manifest.json").string() + ": " + e.what());
  }
  Dataset ds;
  try {
    ds.spec = spec_of(j);
    ds.params = j.at("params").get<std::vector<double>>();
    ds.train_indices = j.at("splits").at("train").get<std::vector<std::size_t>>();
    ds.holdout_indices = j.at("splits").at("holdout").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw ConfigError("malformed dataset manifest: " + std::string(e.what()));
  }
  if (ds.params.size() != ds.spec.count ||
      ds.train_indices.size() + ds.holdout_indices.size() != ds.spec.count) {
    throw ConfigError("dataset manifest counts are inconsistent");
  }
  const std::size_t len = ds.sample_size();
  ds.signals.assign(ds.spec.count * len, 0.0);
  auto read_split = [&](const std::vector<std::size_t>& idx, const char* name) {
    const std::vector<double> flat = read_f64(dir / name);
    if (flat.size() != idx.size() * len) {
      throw ConfigError((dir / name).string() + " has " + std::to_string(flat.size()) +
                        " values, expected " + std::to_string(idx.size() * len));
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] >= ds.spec.count) throw ConfigError("split index out of range");
      std::copy_n(flat.data() + k * len, len, ds.signals.data() + idx[k] * len);
    }
  };
  read_split(ds.train_indices, "train.f64");
  read_split(ds.holdout_indices, "holdout.f64");
  return ds;
}

bool verify_dataset(const std::filesystem::path& dir, int threads) {
  const Dataset stored = load_dataset(dir);
  const Dataset fresh = build_dataset(stored.spec, threads);
  return fresh.params == stored.params && fresh.signals == stored.signals &&
         fresh.train_indices == stored.train_indices &&
         fresh.holdout_indices == stored.holdout_indices;
}

}  // namespace geoae
