// SPDX-License-Identifier: Apache-2.0
// Command-line entry point: dataset generation, training, analysis, suites.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "geoae/checkpoint.hpp"
#include "geoae/disk_data.hpp"
#include "geoae/errors.hpp"
#include "geoae/experiments.hpp"
#include "geoae/grad_check.hpp"
#include "geoae/io.hpp"
#include "geoae/training.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace geoae;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitAcceptance = 4;

struct Global {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::string config;
  int threads = 1;
};

json read_config(const Global& g) {
  if (g.config.empty()) return json::object();
  try {
    return json::parse(read_text(g.config));
  } catch (const json::exception& e) {
    throw ConfigError("config " + g.config + " is not valid JSON: " + e.what());
  }
}

fs::path require_out(const Global& g) {
  if (g.out.empty()) throw ConfigError("--out is required");
  return g.out;
}

Interval parse_interval(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError("interval '" + s + "' must look like LO:HI");
  try {
    return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ConfigError("interval '" + s + "' must look like LO:HI");
  }
}

// ---- gen-disks / gen-diracs ------------------------------------------------------

struct GenOptions {
  std::size_t count = 3000;
  std::size_t mc_samples = kDefaultMcSamples;
  double sigma = kDefaultBlurSigma;
  std::vector<std::string> exclude;
  std::vector<double> support;
  double holdout = 0.1;
};

void add_gen(CLI::App& app, const std::string& name, SignalKind kind, Global& g) {
  auto opts = std::make_shared<GenOptions>();
  CLI::App* cmd = app.add_subcommand(name, kind == SignalKind::kDisks
                                               ? "Render blurred disks and write a dataset"
                                               : "Render Dirac signals and write a dataset");
  cmd->add_option("--count", opts->count, "Number of samples")->capture_default_str();
  cmd->add_option("--exclude", opts->exclude, "Excluded parameter interval LO:HI (repeatable)");
  cmd->add_option("--support", opts->support, "Parameter support LO HI")->expected(2);
  cmd->add_option("--holdout", opts->holdout, "Held-out fraction")->capture_default_str();
  if (kind == SignalKind::kDisks) {
    cmd->add_option("--mc-samples", opts->mc_samples, "Monte Carlo offsets per image")
        ->capture_default_str();
    cmd->add_option("--sigma", opts->sigma, "Blur standard deviation in pixels")
        ->capture_default_str();
  }
  cmd->callback([opts, kind, &g] {
    DatasetSpec spec = kind == SignalKind::kDisks ? DatasetSpec::disks(opts->count, g.seed)
                                                  : DatasetSpec::diracs(opts->count, g.seed);
    const json cfg = read_config(g);
    if (cfg.contains("dataset")) {
      ExperimentConfig base = config_from_json(cfg.dump());
      if (base.dataset.kind == kind) spec = base.dataset;
    }
    if (kind == SignalKind::kDisks) {
      spec.mc_samples = opts->mc_samples;
      spec.sigma = opts->sigma;
    }
    spec.count = opts->count;
    if (g.seed_given) spec.seed = g.seed;
    spec.holdout_fraction = opts->holdout;
    if (!opts->support.empty()) {
      spec.support_low = opts->support[0];
      spec.support_high = opts->support[1];
    }
    for (const std::string& e : opts->exclude) spec.exclusions.push_back(parse_interval(e));
    spec.validate();
    const fs::path out = require_out(g);
    save_dataset(build_dataset(spec, g.threads), out);
    std::printf("wrote %zu %s to %s\n", spec.count, to_string(kind).c_str(), out.c_str());
  });
}

// ---- training ----------------------------------------------------------------------

enum class Task { kDiskAe, kPositionEncoder, kPositionDecoder };

struct TrainFlags {
  std::string data;
  std::optional<std::string> bias;
  std::optional<std::string> reg;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
};

void add_train(CLI::App& app, const std::string& name, Task task, Global& g) {
  auto f = std::make_shared<TrainFlags>();
  const char* help = task == Task::kDiskAe            ? "Train the disk autoencoder"
                     : task == Task::kPositionEncoder ? "Train the position encoder onto n - a"
                                                      : "Train the position decoder";
  CLI::App* cmd = app.add_subcommand(name, help);
  cmd->add_option("--data", f->data, "Dataset directory")->required();
  cmd->add_option("--bias", f->bias, "Biases on|off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--epochs", f->epochs, "Number of epochs");
  cmd->add_option("--batch", f->batch, "Mini-batch size");
  cmd->add_option("--lr", f->lr, "Adam learning rate");
  if (task == Task::kDiskAe) {
    cmd->add_option("--reg", f->reg, "Regulariser")
        ->check(CLI::IsMember({"none", "psi1", "psi2", "psi3"}));
    cmd->add_option("--lambda", f->lambda, "Regulariser weight");
  }
  cmd->callback([f, task, &g] {
    const std::string suite = task == Task::kDiskAe            ? "disk-baseline"
                              : task == Task::kPositionEncoder ? "position-encoder"
                                                               : "position-decoder";
    json cfg = read_config(g);
    cfg["suite"] = suite;
    if (g.seed_given) cfg["seed"] = g.seed;
    TrainConfig tc = config_from_json(cfg.dump()).train;
    if (f->bias) tc.with_bias = *f->bias == "on";
    if (f->reg) tc.reg = regularizer_from_string(*f->reg);
    if (f->lambda) tc.lambda = *f->lambda;
    if (f->epochs) tc.epochs = *f->epochs;
    if (f->batch) tc.batch = *f->batch;
    if (f->lr) tc.lr = *f->lr;

    const Dataset ds = load_dataset(f->data);
    TrainingData data;
    std::vector<Network> chain;
    switch (task) {
      case Task::kDiskAe:
        data = autoencoder_data(ds);
        chain = build_disk_autoencoder(tc);
        break;
      case Task::kPositionEncoder:
        data = position_encoder_data(ds);
        chain = build_position_encoder(tc);
        break;
      case Task::kPositionDecoder:
        data = position_decoder_data(ds);
        chain = build_position_decoder(tc);
        break;
    }
    tc.validate(data.train_indices.size());
    json ex = json::array();
    for (const Interval& e : ds.spec.exclusions) ex.push_back({e.low, e.high});
    TrainOptions opts;
    opts.threads = g.threads;
    opts.out_dir = require_out(g);
    opts.metadata = json{{"suite", suite},
                         {"max_radius", max_observed_radius(ds.spec)},
                         {"exclusions", ex},
                         {"data", f->data}}
                        .dump();
    opts.on_epoch = [&](std::size_t epoch, const TrainHistory& h) {
      if ((epoch + 1) % 10 == 0 || epoch + 1 == tc.epochs) {
        std::fprintf(stderr, "epoch %zu train %.6g holdout %.6g\n", epoch + 1, h.train_mse.back(),
                     h.holdout_mse.back());
      }
    };
    fs::create_directories(opts.out_dir);
    write_text(opts.out_dir / "train_config.json", tc.to_json() + "\n");
    const TrainHistory h = train(chain, data, tc, opts);
    std::printf("final train %.6g holdout %.6g in %.1f s; wrote %s\n", h.train_mse.back(),
                h.holdout_mse.back(), h.wall_seconds, (opts.out_dir / "model.ckpt").c_str());
  });
}

// ---- analyze -----------------------------------------------------------------------

void add_analyze(CLI::App& app, Global& g) {
  struct Flags {
    std::string checkpoint;
    std::vector<std::string> what;
    std::optional<double> radius;
  };
  auto f = std::make_shared<Flags>();
  CLI::App* cmd = app.add_subcommand("analyze", "Analyse a trained checkpoint");
  cmd->add_option("--checkpoint", f->checkpoint, "Checkpoint file")->required();
  cmd->add_option("--what", f->what, "Analyses to run")
      ->required()
      ->check(CLI::IsMember(analysis_names()));
  cmd->add_option("--radius", f->radius, "Largest observed radius (default from checkpoint)");
  cmd->callback([f, &g] {
    const Checkpoint ck = load_checkpoint(f->checkpoint);
    json meta = json::parse(ck.metadata);
    ExperimentConfig c = suite_config(meta.value("suite", std::string("disk-baseline")), ck.seed);
    c.seed = ck.seed;
    c.threads = g.threads;
    c.analyses = f->what;
    c.dataset.exclusions.clear();
    if (meta.contains("exclusions")) {
      for (const json& e : meta.at("exclusions")) {
        c.dataset.exclusions.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
      }
    }
    if (meta.contains("max_radius")) c.dataset.support_high = meta.at("max_radius").get<double>();
    if (f->radius) c.dataset.support_high = *f->radius;
    const fs::path out = require_out(g);
    const std::string summary = run_analyses(c, ck.networks, out);
    write_text(out / "summary.json", summary);
    std::cout << summary;
  });
}

// ---- run-suite / reproduce-figure ----------------------------------------------------

void add_run_suite(CLI::App& app, Global& g, int& status) {
  struct Flags {
    std::string suite;
    std::optional<std::size_t> epochs;
    bool reuse = false;
    bool list = false;
  };
  auto f = std::make_shared<Flags>();
  CLI::App* cmd = app.add_subcommand("run-suite", "Generate, train and analyse one suite");
  cmd->add_option("--suite", f->suite, "Suite name (overrides the config file)");
  cmd->add_option("--epochs", f->epochs, "Override the training epochs");
  cmd->add_flag("--reuse", f->reuse, "Reuse a checkpoint with a matching configuration hash");
  cmd->add_flag("--list", f->list, "List the available suites");
  cmd->callback([f, &g, &status] {
    if (f->list) {
      for (const auto& s : suite_names()) std::printf("%s\n", s.c_str());
      return;
    }
    json cfg = read_config(g);
    if (!f->suite.empty()) cfg["suite"] = f->suite;
    if (!cfg.contains("suite")) throw ConfigError("give --suite or a config with \"suite\"");
    if (g.seed_given) {
      // A new root seed re-derives every seed that the file does not pin.
      cfg["seed"] = g.seed;
    }
    ExperimentConfig c = config_from_json(cfg.dump());
    if (f->epochs) c.train.epochs = *f->epochs;
    c.out_dir = require_out(g);
    c.threads = g.threads;
    const std::string summary = run_suite(c, f->reuse);
    std::cout << summary;
    status = kExitOk;
  });
}

void add_reproduce(CLI::App& app, Global& g) {
  struct Flags {
    std::string name;
    std::size_t epochs = 200;
  };
  auto f = std::make_shared<Flags>();
  CLI::App* cmd = app.add_subcommand("reproduce-figure", "Produce the CSV data behind a figure");
  cmd->add_option("name", f->name, "Figure name")->required();
  cmd->add_option("--epochs", f->epochs, "Disk autoencoder epochs")->capture_default_str();
  cmd->callback([f, &g] {
    reproduce_figure(f->name, g.seed, f->epochs, require_out(g), g.threads);
    std::printf("wrote %s\n", g.out.c_str());
  });
}

// ---- grad-check ----------------------------------------------------------------------

void add_grad_check(CLI::App& app, Global& g, int& status) {
  struct Flags {
    std::size_t batch = 4;
    std::size_t directions = 200;
    std::size_t coordinates = 0;
    double epsilon = 1e-6;
    double tolerance = 1e-4;
    std::string bias = "on";
  };
  auto f = std::make_shared<Flags>();
  CLI::App* cmd = app.add_subcommand(
      "grad-check", "Compare disk autoencoder gradients with central differences");
  cmd->add_option("--batch", f->batch, "Random disks in the batch")->capture_default_str();
  cmd->add_option("--directions", f->directions, "Random directions (0 checks coordinates)")
      ->capture_default_str();
  cmd->add_option("--coordinates", f->coordinates, "Coordinate subset size (0 = all)")
      ->capture_default_str();
  cmd->add_option("--epsilon", f->epsilon, "Finite-difference step")->capture_default_str();
  cmd->add_option("--tolerance", f->tolerance, "Pass threshold")->capture_default_str();
  cmd->add_option("--bias", f->bias, "Biases on|off")->check(CLI::IsMember({"on", "off"}));
  cmd->callback([f, &g, &status] {
    if (f->batch == 0) throw ConfigError("--batch must be positive");
    TrainConfig tc;
    tc.seed = g.seed;
    tc.with_bias = f->bias == "on";
    std::vector<Network> chain = build_disk_autoencoder(tc);
    std::mt19937_64 rng(mix_seed(g.seed, 7));
    std::uniform_real_distribution<double> radius(1.0, 32.0);
    std::normal_distribution<double> bias(0.0, 0.1);
    Tensor x({f->batch, 1, kImageSize, kImageSize});
    for (std::size_t i = 0; i < f->batch; ++i) {
      const DiskImage img = render_disk_mc(radius(rng), kImageSize, kDefaultBlurSigma, 256, rng());
      std::copy(img.pixels.begin(), img.pixels.end(),
                x.data().begin() + static_cast<std::ptrdiff_t>(i * kImageSize * kImageSize));
    }
    std::vector<ParameterRef> refs;
    for (Network& n : chain) {
      for (const ParameterRef& p : n.parameters()) {
        refs.push_back(p);
        if (p.name.find("bias") == std::string::npos) continue;
        for (double& b : p.tensor->data()) b = bias(rng);
      }
    }
    GradCheckOptions opts;
    opts.epsilon = f->epsilon;
    opts.directions = f->directions;
    opts.max_coordinates = f->coordinates;
    opts.seed = g.seed;
    const GradCheckReport r =
        grad_check(refs, [&](bool grad) { return chain_loss_and_grad(chain, x, x, grad); }, opts);
    std::printf("max relative error %.3e over %zu checks (worst %s[%zu]: analytic %.6g numeric %.6g)\n",
                r.max_relative_error, r.coordinates_checked, r.worst_parameter.c_str(),
                r.worst_index, r.worst_analytic, r.worst_numeric);
    const bool pass = r.max_relative_error < f->tolerance;
    std::printf("%s\n", pass ? "PASS" : "FAIL");
    status = pass ? kExitOk : kExitAcceptance;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric autoencoder experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  int status = kExitOk;
  app.add_option("--seed", g.seed, "Root seed")->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  add_gen(app, "gen-disks", SignalKind::kDisks, g);
  add_gen(app, "gen-diracs", SignalKind::kDiracs, g);
  add_train(app, "train-disk-ae", Task::kDiskAe, g);
  add_train(app, "train-position-encoder", Task::kPositionEncoder, g);
  add_train(app, "train-position-decoder", Task::kPositionDecoder, g);
  add_analyze(app, g);
  add_run_suite(app, g, status);
  add_reproduce(app, g);
  add_grad_check(app, g, status);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
