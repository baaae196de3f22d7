// SPDX-License-Identifier: Apache-2.0
#include "geoae/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geoae/checkpoint.hpp"
#include "geoae/errors.hpp"
#include "geoae/io.hpp"
#include "json.hpp"

namespace geoae {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDatasetStream = 100;

struct SuiteInfo {
  const char* name;
  SignalKind kind;
  const char* description;
};

constexpr SuiteInfo kSuites[] = {
    {"disk-baseline", SignalKind::kDisks, "autoencoder with biases on the full radius range"},
    {"disk-nobias", SignalKind::kDisks, "bias-free autoencoder on the full radius range"},
    {"disk-hole", SignalKind::kDisks, "radii in [11, 18] removed from training"},
    {"disk-restricted", SignalKind::kDisks, "radii above 18 removed from training"},
    {"disk-restricted-nobias", SignalKind::kDisks, "bias-free, radii above 18 removed"},
    {"position-encoder", SignalKind::kDiracs, "encoder regressed onto n - a"},
    {"position-decoder", SignalKind::kDiracs, "decoder from the position code to y_a"},
    {"position-handcrafted", SignalKind::kDiracs, "[1, 2, 1] encoder, no training"},
};

const std::vector<std::string> kAnalyses = {"latent",  "error-map", "profiles", "rank1",
                                            "profile", "airy",      "homogeneity",
                                            "filters", "decoding",  "exactness"};

const SuiteInfo& suite_info(const std::string& name) {
  for (const SuiteInfo& s : kSuites) {
    if (name == s.name) return s;
  }
  std::string known;
  for (const SuiteInfo& s : kSuites) known += std::string(known.empty() ? "" : ", ") + s.name;
  throw ConfigError("unknown suite '" + name + "'; available: " + known);
}

json dataset_json(const DatasetSpec& s) {
  json ex = json::array();
  for (const Interval& e : s.exclusions) ex.push_back({e.low, e.high});
  return {{"kind", to_string(s.kind)},   {"count", s.count},
          {"support", {s.support_low, s.support_high}},
          {"exclusions", ex},            {"extent", s.extent},
          {"sigma", s.sigma},            {"mc_samples", s.mc_samples},
          {"seed", s.seed},              {"holdout_fraction", s.holdout_fraction}};
}

void apply_dataset(DatasetSpec& s, const json& j) {
  if (j.contains("kind")) s.kind = signal_kind_from_string(j.at("kind").get<std::string>());
  s.count = j.value("count", s.count);
  if (j.contains("support")) {
    s.support_low = j.at("support").at(0).get<double>();
    s.support_high = j.at("support").at(1).get<double>();
  }
  if (j.contains("exclusions")) {
    s.exclusions.clear();
    for (const json& e : j.at("exclusions")) {
      s.exclusions.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    }
  }
  s.extent = j.value("extent", s.extent);
  if (j.contains("m")) s.extent = j.at("m").get<std::size_t>();
  if (j.contains("n")) s.extent = j.at("n").get<std::size_t>();
  s.sigma = j.value("sigma", s.sigma);
  s.mc_samples = j.value("mc_samples", s.mc_samples);
  s.seed = j.value("seed", s.seed);
  s.holdout_fraction = j.value("holdout_fraction", s.holdout_fraction);
}

json config_json(const ExperimentConfig& c) {
  return {{"suite", c.suite},
          {"seed", c.seed},
          {"dataset", dataset_json(c.dataset)},
          {"train", json::parse(c.train.to_json())},
          {"analyses", c.analyses}};
}

std::size_t train_count(const DatasetSpec& s) {
  const auto hold = static_cast<std::size_t>(
      std::llround(s.holdout_fraction * static_cast<double>(s.count)));
  return s.count - std::min(hold, s.count);
}

std::string csv_row(std::initializer_list<double> values) {
  std::string row;
  for (double v : values) row += (row.empty() ? "" : ",") + format_double(v);
  return row + "\n";
}

}  // namespace

void ExperimentConfig::validate() const {
  const SuiteInfo& info = suite_info(suite);
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (dataset.kind != info.kind) {
    throw ConfigError("suite " + suite + " needs a " + to_string(info.kind) + " dataset");
  }
  for (const std::string& a : analyses) {
    if (std::find(kAnalyses.begin(), kAnalyses.end(), a) == kAnalyses.end()) {
      std::string known;
      for (const auto& k : kAnalyses) known += (known.empty() ? "" : ", ") + k;
      throw ConfigError("unknown analysis '" + a + "'; available: " + known);
    }
  }
  if (suite == "position-handcrafted") return;
  dataset.validate();
  train.validate(train_count(dataset));
  if (dataset.kind == SignalKind::kDisks && dataset.extent != kImageSize) {
    throw ConfigError("the disk networks expect " + std::to_string(kImageSize) + "x" +
                      std::to_string(kImageSize) + " images");
  }
  if (dataset.kind == SignalKind::kDiracs && dataset.extent != kSignalLength) {
    throw ConfigError("the position networks expect signals of length " +
                      std::to_string(kSignalLength));
  }
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(config_json(*this).dump()); }

std::string ExperimentConfig::training_hash() const {
  json j = config_json(*this);
  j.erase("analyses");
  return fnv1a_hex(j.dump());
}

std::string ExperimentConfig::to_json() const {
  json j = config_json(*this);
  j["hash"] = hash();
  j["training_hash"] = training_hash();
  return j.dump(2);
}

std::vector<std::string> suite_names() {
  std::vector<std::string> out;
  for (const SuiteInfo& s : kSuites) out.emplace_back(s.name);
  return out;
}

std::vector<std::string> analysis_names() { return kAnalyses; }

ExperimentConfig suite_config(const std::string& suite, std::uint64_t seed) {
  const SuiteInfo& info = suite_info(suite);
  ExperimentConfig c;
  c.suite = suite;
  c.seed = seed;
  const std::uint64_t data_seed = mix_seed(seed, kDatasetStream);
  c.dataset = info.kind == SignalKind::kDisks ? DatasetSpec::disks(3000, data_seed)
                                              : DatasetSpec::diracs(3000, data_seed);
  c.train.seed = seed;
  if (suite == "disk-baseline") {
    c.analyses = {"latent", "error-map", "profiles"};
  } else if (suite == "disk-nobias") {
    c.train.with_bias = false;
    c.analyses = {"rank1", "profile", "airy", "latent", "homogeneity"};
  } else if (suite == "disk-hole") {
    c.dataset.exclusions = {{11.0, 18.0}};
    c.analyses = {"error-map", "latent"};
  } else if (suite == "disk-restricted") {
    c.dataset.exclusions = {{18.0, 32.0}};
    c.analyses = {"error-map", "latent", "profiles"};
  } else if (suite == "disk-restricted-nobias") {
    c.dataset.exclusions = {{18.0, 32.0}};
    c.train.with_bias = false;
    c.analyses = {"rank1", "profile", "error-map", "profiles"};
  } else if (suite == "position-encoder") {
    c.train.epochs = 5000;
    c.analyses = {"filters"};
  } else if (suite == "position-decoder") {
    c.train.epochs = 1000;
    c.train.batch = 50;
    c.analyses = {"decoding"};
  } else {
    c.analyses = {"exactness"};
  }
  return c;
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    ExperimentConfig c = suite_config(j.value("suite", std::string("disk-baseline")),
                                      j.value("seed", std::uint64_t{0}));
    if (j.contains("dataset")) apply_dataset(c.dataset, j.at("dataset"));
    if (j.contains("train")) {
      json merged = json::parse(c.train.to_json());
      merged.update(j.at("train"));
      c.train = TrainConfig::from_json(merged.dump());
    }
    if (j.contains("analyses")) c.analyses = j.at("analyses").get<std::vector<std::string>>();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

double max_observed_radius(const DatasetSpec& spec) {
  double top = spec.support_high;
  bool moved = true;
  while (moved) {
    moved = false;
    for (const Interval& e : spec.exclusions) {
      if (e.high >= top && e.low < top) {
        top = e.low;
        moved = true;
      }
    }
  }
  return top;
}

namespace {

struct Trained {
  std::vector<Network> networks;
  TrainHistory history;
  bool reused = false;
};

Trained obtain_networks(const ExperimentConfig& c, const fs::path& dir, bool reuse) {
  Trained t;
  if (c.suite == "position-handcrafted") {
    t.networks = {build_handcrafted_position_encoder(6)};
    t.reused = true;
    return t;
  }
  const fs::path ckpt = dir / "train" / "model.ckpt";
  if (reuse && fs::exists(ckpt)) {
    Checkpoint loaded = load_checkpoint(ckpt);
    if (loaded.train_config_hash == c.training_hash()) {
      t.networks = std::move(loaded.networks);
      t.reused = true;
      return t;
    }
  }
  const Dataset ds = build_dataset(c.dataset, c.threads);
  save_dataset(ds, dir / "dataset");
  TrainingData data;
  if (c.suite == "position-encoder") {
    t.networks = build_position_encoder(c.train);
    data = position_encoder_data(ds);
  } else if (c.suite == "position-decoder") {
    t.networks = build_position_decoder(c.train);
    data = position_decoder_data(ds);
  } else {
    t.networks = build_disk_autoencoder(c.train);
    data = autoencoder_data(ds);
  }
  json meta = {{"suite", c.suite},
               {"max_radius", max_observed_radius(c.dataset)},
               {"exclusions", dataset_json(c.dataset).at("exclusions")}};
  TrainOptions opts;
  opts.threads = c.threads;
  opts.out_dir = dir / "train";
  opts.metadata = meta.dump();
  opts.checkpoint_hash = c.training_hash();
  t.history = train(t.networks, data, c.train, opts);
  return t;
}

}  // namespace

std::vector<Network> train_or_load(const ExperimentConfig& config, const fs::path& dir,
                                   bool reuse) {
  config.validate();
  return obtain_networks(config, dir, reuse).networks;
}

// ---- analyses ----------------------------------------------------------------

std::vector<double> latent_radii() { return linspace(4.0, 28.0, 50); }
std::vector<double> error_radii() { return linspace(1.0, 31.0, 61); }

Rank1Report analyze_rank1(const Network& encoder, const Network& decoder, double r_max,
                          int threads) {
  Rank1Report rep;
  rep.radii = linspace(1.0, r_max, 50);
  const std::size_t m = encoder.spec().input_shape.back();
  const std::vector<double> images = oracle_images(rep.radii, m, kDefaultBlurSigma, threads);
  const std::vector<Network> chain{encoder, decoder};
  const Tensor out = run_chain(chain, Tensor(batch_shape(encoder.spec().input_shape,
                                                         rep.radii.size()),
                                             images));
  rep.fit = rank1_fit(out.data(), rep.radii.size(), m * m);
  rep.h = rep.fit.h;
  rep.profile = radial_average(rep.fit.f, m);
  for (double r : rep.radii) rep.h_hat.push_back(optimal_h(rep.profile, r));
  rep.pearson = pearson(rep.h, rep.h_hat);
  return rep;
}

ProfileReport analyze_profile(const Network& encoder, const Network& decoder, double r_max,
                              int threads) {
  const Rank1Report r1 = analyze_rank1(encoder, decoder, r_max, threads);
  ProfileReport rep;
  rep.trained = r1.profile.normalized();
  // Average of the normalised output profiles, each aligned with the template.
  const std::size_t m = encoder.spec().input_shape.back();
  const std::vector<Network> chain{encoder, decoder};
  const std::vector<double> images = oracle_images(r1.radii, m, kDefaultBlurSigma, threads);
  const Tensor out = run_chain(chain, Tensor(batch_shape(encoder.spec().input_shape,
                                                         r1.radii.size()),
                                             images));
  rep.mean_profile = rep.trained;
  std::fill(rep.mean_profile.values.begin(), rep.mean_profile.values.end(), 0.0);
  for (std::size_t i = 0; i < r1.radii.size(); ++i) {
    const RadialProfile p = radial_average(
        std::span<const double>(out.data().data() + i * m * m, m * m), m);
    if (!(p.norm2() > 0.0)) continue;
    const RadialProfile pn = p.normalized();
    const double sign = profile_cosine(pn, rep.trained) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < pn.size(); ++j) rep.mean_profile.values[j] += sign * pn.values[j];
  }
  rep.mean_profile = rep.mean_profile.normalized();
  rep.optimal = maximize_J(r_max, 512).profile;
  rep.l2_error = profile_l2_error(rep.trained, rep.optimal);
  rep.cosine = profile_cosine(rep.trained, rep.optimal);
  rep.l2_error_mean_profile = profile_l2_error(rep.mean_profile, rep.optimal);
  return rep;
}

AiryReport analyze_airy(double r_max, std::size_t cells) {
  AiryReport rep;
  rep.optimal = maximize_J(r_max, cells);
  rep.airy = airy_profile(r_max, cells);
  rep.l2_error = profile_l2_error(rep.optimal.profile, rep.airy.profile);
  return rep;
}

ErrorMapReport analyze_error_map(const Network& encoder, const Network& decoder,
                                 std::span<const Interval> exclusions, int threads) {
  ErrorMapReport rep;
  const std::vector<double> radii = error_radii();
  rep.rows = error_by_radius(encoder, decoder, radii, exclusions, kDefaultBlurSigma, threads);
  std::vector<double> inside, outside;
  for (const RadiusError& e : rep.rows) (e.excluded ? inside : outside).push_back(e.mse);
  if (!inside.empty()) {
    rep.max_excluded = *std::max_element(inside.begin(), inside.end());
    rep.mean_excluded =
        std::accumulate(inside.begin(), inside.end(), 0.0) / static_cast<double>(inside.size());
  }
  if (!outside.empty()) rep.median_observed = median(outside);
  const std::vector<double> probe{18.0, 27.0};
  const std::vector<RadiusError> p =
      error_by_radius(encoder, decoder, probe, {}, kDefaultBlurSigma, threads);
  rep.mass_ratio_27_18 = p[1].output_mass / p[0].output_mass;
  return rep;
}

FilterReport analyze_filters(const Network& encoder) {
  FilterReport rep;
  const double ref_norm = std::sqrt(6.0);
  for (const ConvParams& p : encoder.layers()) {
    if (p.weights.size() != 3) throw ConfigError("filter analysis needs single-channel 1D layers");
    const std::array<double, 3> w{p.weights[0], p.weights[1], p.weights[2]};
    const double n = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    const double c = n > 0.0 ? std::abs(w[0] + 2.0 * w[1] + w[2]) / (n * ref_norm) : 0.0;
    rep.taps.push_back(w);
    rep.cosines.push_back(c);
    rep.matching += c >= 0.99;
  }
  return rep;
}

DecodingReport analyze_decoding(const Network& decoder) {
  DecodingReport rep;
  const std::size_t n = decoder.spec().output_shape().back();
  rep.positions = linspace(1.0, static_cast<double>(n) - 2.0, 4 * (n - 3) + 1);
  std::vector<double> codes;
  for (double a : rep.positions) codes.push_back(position_code(a, n));
  rep.outputs = decode_codes(decoder, codes);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rep.positions.size(); ++i) {
    double* row = rep.outputs.data() + i * n;
    const std::size_t am = static_cast<std::size_t>(std::max_element(row, row + n) - row);
    rep.argmax.push_back(am);
    hits += std::abs(static_cast<double>(am) - rep.positions[i]) <= 1.0;
    const double peak = row[am];
    if (peak > 0.0) {
      for (std::size_t k = 0; k < n; ++k) row[k] /= peak;
    }
  }
  rep.accuracy = static_cast<double>(hits) / static_cast<double>(rep.positions.size());
  return rep;
}

ExactnessReport analyze_exactness() {
  ExactnessReport rep;
  rep.exact = true;
  const Network e3 = build_handcrafted_position_encoder(3);
  for (std::size_t a = 0; a < 8; ++a) {
    Tensor x({1, 1, 8});
    x[a] = 1.0;
    const double v = e3.forward(x)[0];
    rep.level3.push_back(v);
    rep.exact = rep.exact && v == position_encode_closed_form(static_cast<long>(a), 3);
  }
  const Network e6 = build_handcrafted_position_encoder(6);
  for (std::size_t a = 0; a < 64; ++a) {
    Tensor x({1, 1, 64});
    x[a] = 1.0;
    rep.level6_correct += e6.forward(x)[0] == position_encode_closed_form(static_cast<long>(a), 6);
    ++rep.level6_total;
  }
  rep.exact = rep.exact && rep.level6_correct == rep.level6_total;
  return rep;
}

double homogeneity_deviation(const Network& decoder, double z, std::size_t trials,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_lambda(std::log(1e-2), std::log(1e2));
  const std::vector<double> base = decode_codes(decoder, std::vector<double>{z});
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const double lambda = std::exp(log_lambda(rng));
    const std::vector<double> scaled = decode_codes(decoder, std::vector<double>{lambda * z});
    for (std::size_t k = 0; k < base.size(); ++k) {
      const double expect = lambda * base[k];
      const double denom = std::max(std::abs(expect), std::abs(scaled[k]));
      if (denom == 0.0) continue;
      worst = std::max(worst, std::abs(scaled[k] - expect) / denom);
    }
  }
  return worst;
}

// ---- suites ------------------------------------------------------------------

namespace {

void write_profile_csv(const fs::path& path, const std::vector<std::string>& names,
                       const std::vector<const RadialProfile*>& profiles) {
  double step = profiles.front()->step, extent = 0.0;
  for (const RadialProfile* p : profiles) {
    step = std::min(step, p->step);
    extent = std::max(extent, p->extent());
  }
  std::string out = "rho";
  for (const auto& n : names) out += "," + n;
  out += "\n";
  const auto cells = static_cast<std::size_t>(std::llround(extent / step));
  for (std::size_t j = 0; j < cells; ++j) {
    const double rho = (static_cast<double>(j) + 0.5) * step;
    out += format_double(rho);
    for (const RadialProfile* p : profiles) out += "," + format_double(p->at(rho));
    out += "\n";
  }
  write_text(path, out);
}

void run_analysis(const std::string& what, const ExperimentConfig& c,
                  const std::vector<Network>& nets, const fs::path& dir, json& summary) {
  const double r_max = max_observed_radius(c.dataset);
  const bool disk = c.dataset.kind == SignalKind::kDisks && nets.size() == 2;
  auto need_disk = [&] {
    if (!disk) throw ConfigError("analysis '" + what + "' needs a disk autoencoder");
  };
  if (what == "latent") {
    need_disk();
    const LatentCurve lc = latent_curve(nets[0], latent_radii(), kDefaultBlurSigma, c.threads);
    std::string csv = "radius,code\n";
    for (std::size_t i = 0; i < lc.radii.size(); ++i) csv += csv_row({lc.radii[i], lc.codes[i]});
    write_text(dir / "latent_curve.csv", csv);
    summary["latent"] = {{"beta", lc.beta}, {"spearman", lc.spearman}};
  } else if (what == "error-map") {
    need_disk();
    const ErrorMapReport rep = analyze_error_map(nets[0], nets[1], c.dataset.exclusions, c.threads);
    std::string csv = "radius,mse,target_mass,output_mass,excluded\n";
    for (const RadiusError& e : rep.rows) {
      csv += csv_row({e.radius, e.mse, e.target_mass, e.output_mass, e.excluded ? 1.0 : 0.0});
    }
    write_text(dir / "error_map.csv", csv);
    summary["error_map"] = {{"max_excluded_mse", rep.max_excluded},
                            {"mean_excluded_mse", rep.mean_excluded},
                            {"median_observed_mse", rep.median_observed},
                            {"mass_ratio_27_18", rep.mass_ratio_27_18}};
  } else if (what == "profiles") {
    need_disk();
    const std::vector<double> radii = linspace(2.0, 30.0, 8);
    const std::size_t m = nets[0].spec().input_shape.back();
    const std::vector<double> images = oracle_images(radii, m, kDefaultBlurSigma, c.threads);
    const Tensor out = run_chain(nets, Tensor(batch_shape(nets[0].spec().input_shape, radii.size()), images));
    std::string csv = "x";
    for (double r : radii) csv += ",input_r" + format_double(r) + ",output_r" + format_double(r);
    csv += "\n";
    const std::size_t row = m / 2;
    for (std::size_t x = 0; x < m; ++x) {
      csv += std::to_string(x);
      for (std::size_t i = 0; i < radii.size(); ++i) {
        csv += "," + format_double(images[i * m * m + row * m + x]) + "," +
               format_double(out[i * m * m + row * m + x]);
      }
      csv += "\n";
    }
    write_text(dir / "output_profiles.csv", csv);
  } else if (what == "rank1") {
    need_disk();
    const Rank1Report rep = analyze_rank1(nets[0], nets[1], r_max, c.threads);
    std::string csv = "radius,h,h_hat\n";
    for (std::size_t i = 0; i < rep.radii.size(); ++i) {
      csv += csv_row({rep.radii[i], rep.h[i], rep.h_hat[i]});
    }
    write_text(dir / "rank1.csv", csv);
    summary["rank1"] = {{"residual_fraction", rep.fit.residual_fraction},
                        {"pearson_h_hhat", rep.pearson},
                        {"sigma1", rep.fit.sigma1}};
  } else if (what == "profile") {
    need_disk();
    const ProfileReport rep = analyze_profile(nets[0], nets[1], r_max, c.threads);
    write_profile_csv(dir / "profile.csv", {"trained", "mean_of_outputs", "energy_maximiser"},
                      {&rep.trained, &rep.mean_profile, &rep.optimal});
    summary["profile"] = {{"R", r_max},
                          {"l2_error", rep.l2_error},
                          {"cosine", rep.cosine},
                          {"l2_error_mean_of_outputs", rep.l2_error_mean_profile}};
  } else if (what == "airy") {
    const AiryReport rep = analyze_airy(r_max);
    write_profile_csv(dir / "airy.csv", {"energy_maximiser", "airy"},
                      {&rep.optimal.profile, &rep.airy.profile});
    summary["airy"] = {{"R", r_max},
                       {"k", rep.airy.k},
                       {"first_zero", rep.airy.first_zero},
                       {"l2_error", rep.l2_error},
                       {"iterations", rep.optimal.energies.size() - 1},
                       {"converged", rep.optimal.converged}};
  } else if (what == "homogeneity") {
    need_disk();
    if (nets[1].spec().layers.front().has_bias) {
      throw ConfigError("homogeneity needs a bias-free decoder");
    }
    const std::vector<double> r{16.0};
    const std::size_t m = nets[0].spec().input_shape.back();
    const Tensor z = encode(nets[0], Tensor(batch_shape(nets[0].spec().input_shape, 1),
                                            oracle_images(r, m, kDefaultBlurSigma)));
    summary["homogeneity"] = {{"code", z[0]},
                              {"max_relative_deviation", homogeneity_deviation(nets[1], z[0], 50, c.seed)}};
  } else if (what == "filters") {
    const FilterReport rep = analyze_filters(nets.at(0));
    std::string csv = "layer,w0,w1,w2,abs_cosine_121\n";
    for (std::size_t i = 0; i < rep.taps.size(); ++i) {
      csv += std::to_string(i) + "," + format_double(rep.taps[i][0]) + "," +
             format_double(rep.taps[i][1]) + "," + format_double(rep.taps[i][2]) + "," +
             format_double(rep.cosines[i]) + "\n";
    }
    write_text(dir / "filters.csv", csv);
    summary["filters"] = {{"cosines", rep.cosines}, {"layers_matching", rep.matching}};
  } else if (what == "decoding") {
    const DecodingReport rep = analyze_decoding(nets.at(0));
    const std::size_t n = rep.outputs.size() / rep.positions.size();
    std::string csv = "position,argmax";
    for (std::size_t k = 0; k < n; ++k) csv += ",t" + std::to_string(k);
    csv += "\n";
    for (std::size_t i = 0; i < rep.positions.size(); ++i) {
      csv += format_double(rep.positions[i]) + "," + std::to_string(rep.argmax[i]);
      for (std::size_t k = 0; k < n; ++k) csv += "," + format_double(rep.outputs[i * n + k]);
      csv += "\n";
    }
    write_text(dir / "decoding.csv", csv);
    summary["decoding"] = {{"accuracy_within_1", rep.accuracy},
                           {"positions", rep.positions.size()}};
  } else if (what == "exactness") {
    const ExactnessReport rep = analyze_exactness();
    std::string csv = "levels,position,output,closed_form\n";
    for (std::size_t a = 0; a < rep.level3.size(); ++a) {
      csv += "3," + std::to_string(a) + "," + format_double(rep.level3[a]) + "," +
             format_double(position_encode_closed_form(static_cast<long>(a), 3)) + "\n";
    }
    write_text(dir / "exactness.csv", csv);
    summary["exactness"] = {{"level3_outputs", rep.level3},
                            {"level6_correct", rep.level6_correct},
                            {"level6_total", rep.level6_total},
                            {"exact", rep.exact}};
  }
}

}  // namespace

std::string run_analyses(const ExperimentConfig& config, const std::vector<Network>& networks,
                         const fs::path& dir) {
  fs::create_directories(dir);
  json summary = json::object();
  for (const std::string& a : config.analyses) {
    if (std::find(kAnalyses.begin(), kAnalyses.end(), a) == kAnalyses.end()) {
      std::string known;
      for (const auto& k : kAnalyses) known += (known.empty() ? "" : ", ") + k;
      throw ConfigError("unknown analysis '" + a + "'; available: " + known);
    }
    run_analysis(a, config, networks, dir, summary);
  }
  return summary.dump(2) + "\n";
}

std::string run_suite(const ExperimentConfig& c, bool reuse_checkpoint) {
  c.validate();
  if (c.out_dir.empty()) throw ConfigError("run_suite needs an output directory");
  fs::create_directories(c.out_dir);
  fs::remove(c.out_dir / "FAILED");
  write_text(c.out_dir / "config.json", c.to_json() + "\n");
  try {
    Trained t = obtain_networks(c, c.out_dir, reuse_checkpoint);
    json summary = {{"suite", c.suite}, {"seed", c.seed}, {"hash", c.hash()}};
    if (!t.history.train_mse.empty()) {
      summary["train"] = {{"final_train_mse", t.history.train_mse.back()},
                          {"final_holdout_mse", t.history.holdout_mse.back()},
                          {"epochs", t.history.train_mse.size()}};
    }
    for (const std::string& a : c.analyses) run_analysis(a, c, t.networks, c.out_dir, summary);
    const std::string text = summary.dump(2) + "\n";
    write_text(c.out_dir / "summary.json", text);
    return text;
  } catch (const std::exception& e) {
    write_text(c.out_dir / "FAILED", std::string(e.what()) + "\n");
    throw;
  }
}

std::vector<std::string> figure_names() {
  return {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11"};
}

void reproduce_figure(const std::string& name, std::uint64_t seed, std::size_t disk_epochs,
                      const fs::path& out_dir, int threads) {
  auto run = [&](ExperimentConfig c, std::vector<std::string> analyses, const fs::path& dir) {
    c.analyses = std::move(analyses);
    if (c.dataset.kind == SignalKind::kDisks) c.train.epochs = disk_epochs;
    c.out_dir = dir;
    c.threads = threads;
    run_suite(c);
  };
  if (name == "fig2") {
    run(suite_config("disk-baseline", seed), {"profiles"}, out_dir);
  } else if (name == "fig3") {
    run(suite_config("disk-baseline", seed), {"latent"}, out_dir);
  } else if (name == "fig4") {
    run(suite_config("disk-restricted", seed), {"error-map", "profiles"}, out_dir);
  } else if (name == "fig5") {
    run(suite_config("disk-hole", seed), {"error-map", "latent"}, out_dir);
  } else if (name == "fig6") {
    const std::vector<std::pair<Regularizer, double>> regs{
        {Regularizer::kNone, 0.0}, {Regularizer::kPsi1, 1.0},
        {Regularizer::kPsi2, 10.0}, {Regularizer::kPsi3, 10.0}};
    for (const auto& [reg, lambda] : regs) {
      ExperimentConfig c = suite_config("disk-hole", seed);
      c.train.reg = reg;
      c.train.lambda = lambda;
      run(c, {"error-map", "latent"}, out_dir / to_string(reg));
    }
  } else if (name == "fig7") {
    for (double lambda : {0.1, 1.0, 10.0, 50.0, 100.0}) {
      ExperimentConfig c = suite_config("disk-hole", seed);
      c.train.reg = Regularizer::kPsi3;
      c.train.lambda = lambda;
      run(c, {"error-map", "latent"}, out_dir / ("lambda_" + format_double(lambda)));
    }
  } else if (name == "fig8") {
    run(suite_config("position-encoder", seed), {"filters"}, out_dir);
  } else if (name == "fig9") {
    run(suite_config("position-decoder", seed), {"decoding"}, out_dir);
  } else if (name == "fig10") {
    run(suite_config("disk-nobias", seed), {"rank1"}, out_dir);
  } else if (name == "fig11") {
    run(suite_config("disk-nobias", seed), {"profile", "airy"}, out_dir);
  } else {
    std::string known;
    for (const auto& f : figure_names()) known += (known.empty() ? "" : ", ") + f;
    throw ConfigError("unknown figure '" + name + "'; available: " + known);
  }
}

}  // namespace geoae
