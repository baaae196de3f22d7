// SPDX-License-Identifier: Apache-2.0
#include "geoae/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "geoae/adam.hpp"
#include "geoae/checkpoint.hpp"
#include "geoae/errors.hpp"
#include "geoae/io.hpp"
#include "geoae/parallel.hpp"
#include "json.hpp"

namespace geoae {

using nlohmann::json;

namespace {

// Samples per gradient chunk. Fixed so the summation order never depends on
// how many threads run the chunks.
constexpr std::size_t kChunk = 20;

enum SeedStream : std::uint64_t { kEncoderInit = 1, kDecoderInit, kShuffle, kNeighbor };

}  // namespace

std::string to_string(Regularizer reg) {
  switch (reg) {
    case Regularizer::kNone: return "none";
    case Regularizer::kPsi1: return "psi1";
    case Regularizer::kPsi2: return "psi2";
    case Regularizer::kPsi3: return "psi3";
  }
  return "none";
}

Regularizer regularizer_from_string(const std::string& s) {
  if (s == "none") return Regularizer::kNone;
  if (s == "psi1") return Regularizer::kPsi1;
  if (s == "psi2") return Regularizer::kPsi2;
  if (s == "psi3") return Regularizer::kPsi3;
  throw ConfigError("unknown regulariser '" + s + "' (expected none, psi1, psi2 or psi3)");
}

void TrainConfig::validate(std::size_t train_size) const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
  if (batch == 0) throw ConfigError("batch size must be positive");
  if (epochs == 0) throw ConfigError("epoch count must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda must be a finite value >= 0, got " + format_double(lambda));
  }
  if (reg == Regularizer::kNone && lambda != 0.0) {
    throw ConfigError("lambda = " + format_double(lambda) + " given without a regulariser");
  }
  if (batch > train_size) {
    throw ConfigError("batch size " + std::to_string(batch) + " exceeds the " +
                      std::to_string(train_size) + " training samples");
  }
  if (reg == Regularizer::kPsi1 && batch < 2) {
    throw ConfigError("psi1 needs batches of at least 2 samples");
  }
}

std::string TrainConfig::to_json() const {
  const json j = {{"lr", lr},
                  {"batch", batch},
                  {"epochs", epochs},
                  {"seed", seed},
                  {"bias", with_bias},
                  {"reg", to_string(reg)},
                  {"lambda", lambda}};
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    c.lr = j.value("lr", c.lr);
    c.batch = j.value("batch", c.batch);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.with_bias = j.value("bias", c.with_bias);
    c.reg = regularizer_from_string(j.value("reg", std::string("none")));
    c.lambda = j.value("lambda", c.lambda);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed training config: ") + e.what());
  }
  return c;
}

std::string TrainConfig::hash() const { return fnv1a_hex(to_json()); }

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,train_mse,holdout_mse,reg_value\n";
  for (std::size_t e = 0; e < train_mse.size(); ++e) {
    out += std::to_string(e + 1) + "," + format_double(train_mse[e]) + "," +
           format_double(holdout_mse[e]) + "," + format_double(reg_value[e]) + "\n";
  }
  return out;
}

const double* TrainingData::target(std::size_t i) const {
  return targets.empty() ? input(i) : targets.data() + i * target_size();
}

TrainingData autoencoder_data(const Dataset& ds) {
  if (ds.spec.kind != SignalKind::kDisks) throw ConfigError("autoencoder data needs disks");
  TrainingData d;
  d.input_shape = {1, ds.spec.extent, ds.spec.extent};
  d.target_shape = d.input_shape;
  d.inputs = ds.signals;
  d.params = ds.params;
  d.train_indices = ds.train_indices;
  d.holdout_indices = ds.holdout_indices;
  return d;
}

TrainingData position_encoder_data(const Dataset& ds) {
  if (ds.spec.kind != SignalKind::kDiracs) throw ConfigError("position data needs Diracs");
  TrainingData d;
  d.input_shape = {1, ds.spec.extent};
  d.target_shape = {1};
  d.inputs = ds.signals;
  for (double a : ds.params) d.targets.push_back(static_cast<double>(ds.spec.extent) - a);
  d.params = ds.params;
  d.train_indices = ds.train_indices;
  d.holdout_indices = ds.holdout_indices;
  return d;
}

double position_code(double position, std::size_t n) {
  return (static_cast<double>(n) - position) / static_cast<double>(n);
}

TrainingData position_decoder_data(const Dataset& ds) {
  if (ds.spec.kind != SignalKind::kDiracs) throw ConfigError("position data needs Diracs");
  TrainingData d;
  d.input_shape = {1, 1};
  d.target_shape = {1, ds.spec.extent};
  for (double a : ds.params) d.inputs.push_back(position_code(a, ds.spec.extent));
  d.targets = ds.signals;
  d.params = ds.params;
  d.train_indices = ds.train_indices;
  d.holdout_indices = ds.holdout_indices;
  return d;
}

double mse_loss(const Tensor& x, const Tensor& xhat) {
  if (x.shape() != xhat.shape() || x.rank() < 1) {
    throw std::invalid_argument("mse_loss: shapes " + shape_string(x.shape()) + " and " +
                                shape_string(xhat.shape()) + " differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - xhat[i];
    sum += d * d;
  }
  return sum / static_cast<double>(x.extent(0));
}

double reg_psi1(std::span<const double> x, std::span<const double> z, std::size_t batch,
                std::span<const std::size_t> neighbor) {
  if (batch < 2) throw ConfigError("psi1 needs at least two samples");
  if (neighbor.size() != batch || x.size() % batch != 0 || z.size() % batch != 0) {
    throw std::invalid_argument("reg_psi1: inconsistent batch layout");
  }
  const std::size_t xs = x.size() / batch, zs = z.size() / batch;
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t j = neighbor[i];
    double dx = 0.0, dz = 0.0;
    for (std::size_t k = 0; k < xs; ++k) dx += (x[i * xs + k] - x[j * xs + k]) * (x[i * xs + k] - x[j * xs + k]);
    for (std::size_t k = 0; k < zs; ++k) dz += (z[i * zs + k] - z[j * zs + k]) * (z[i * zs + k] - z[j * zs + k]);
    total += (dx - dz) * (dx - dz);
  }
  return total / static_cast<double>(batch);
}

double reg_psi1(const Tensor& x, const Tensor& x_neighbor, const Network& encoder) {
  if (x.shape() != x_neighbor.shape()) throw std::invalid_argument("reg_psi1: shape mismatch");
  const std::size_t b = x.extent(0);
  if (b < 1) throw ConfigError("psi1 needs a non-empty batch");
  const Tensor z = encode(encoder, x), zn = encode(encoder, x_neighbor);
  double total = 0.0;
  const std::size_t xs = x.size() / b, zs = z.size() / b;
  for (std::size_t i = 0; i < b; ++i) {
    double dx = 0.0, dz = 0.0;
    for (std::size_t k = 0; k < xs; ++k) dx += std::pow(x[i * xs + k] - x_neighbor[i * xs + k], 2);
    for (std::size_t k = 0; k < zs; ++k) dz += std::pow(z[i * zs + k] - zn[i * zs + k], 2);
    total += (dx - dz) * (dx - dz);
  }
  return total / static_cast<double>(b);
}

double reg_psi3(const Network& encoder) {
  double s = 0.0;
  for (const ConvParams& p : encoder.layers()) {
    for (double w : p.weights.data()) s += w * w;
  }
  return s;
}

double reg_psi2(const Network& encoder, const Network& decoder) {
  return reg_psi3(encoder) + reg_psi3(decoder);
}

std::vector<std::size_t> pick_neighbor(std::size_t batch, std::mt19937_64& rng) {
  if (batch < 2) throw ConfigError("neighbour pairing needs a batch of at least 2");
  std::uniform_int_distribution<std::size_t> dist(0, batch - 2);
  std::vector<std::size_t> out(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t k = dist(rng);
    out[i] = k >= i ? k + 1 : k;
  }
  return out;
}

Tensor run_chain(std::span<const Network> chain, const Tensor& input) {
  Tensor cur = input;
  for (const Network& net : chain) {
    cur = net.forward(cur.reshaped(batch_shape(net.spec().input_shape, cur.extent(0))));
  }
  return cur;
}

namespace {

std::size_t total_parameters(std::span<const Network> chain) {
  std::size_t n = 0;
  for (const Network& net : chain) n += net.parameter_count();
  return n;
}

Tensor gather(const TrainingData& data, std::span<const std::size_t> rows, bool targets) {
  const Shape& per = targets ? data.target_shape : data.input_shape;
  const std::size_t len = shape_size(per);
  Tensor t(batch_shape(per, rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double* src = targets ? data.target(rows[k]) : data.input(rows[k]);
    std::copy_n(src, len, t.data().data() + k * len);
  }
  return t;
}

// Forward and backward over one chunk. `scale` multiplies the squared-error
// gradient (1 / batch size); `code_grad`, if non-empty, is added to the
// gradient arriving at the output of chain[0]. Returns the summed SSE.
double chunk_pass(std::span<const Network> chain, const Tensor& input, const Tensor& target,
                  double scale, std::span<const double> code_grad, std::span<double> grad) {
  std::vector<Network::Trace> traces(chain.size());
  Tensor cur = input;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const Network& net = chain[i];
    cur = net.forward(cur.reshaped(batch_shape(net.spec().input_shape, cur.extent(0))),
                      &traces[i]);
  }
  if (cur.size() != target.size()) {
    throw std::invalid_argument("chain output " + shape_string(cur.shape()) +
                                " does not match target " + shape_string(target.shape()));
  }
  double sse = 0.0;
  Tensor g(cur.shape());
  for (std::size_t k = 0; k < cur.size(); ++k) {
    const double d = cur[k] - target[k];
    sse += d * d;
    g[k] = 2.0 * scale * d;
  }
  std::vector<std::size_t> offsets(chain.size());
  std::size_t off = 0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    offsets[i] = off;
    off += chain[i].parameter_count();
  }
  for (std::size_t i = chain.size(); i-- > 0;) {
    if (i == 0 && !code_grad.empty()) {
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += code_grad[k];
    }
    const Network& net = chain[i];
    const Tensor& out_pre = traces[i].pre.back();
    g = net.backward(traces[i], g.reshaped(out_pre.shape()),
                     grad.subspan(offsets[i], net.parameter_count()));
  }
  return sse;
}

std::vector<ParameterRef> all_parameters(std::vector<Network>& chain) {
  std::vector<ParameterRef> refs;
  for (Network& net : chain) {
    for (const ParameterRef& r : net.parameters()) refs.push_back(r);
  }
  return refs;
}

void write_grads(std::vector<ParameterRef>& refs, std::span<const double> flat) {
  std::size_t off = 0;
  for (ParameterRef& r : refs) {
    r.tensor->enable_grad();
    std::copy_n(flat.data() + off, r.tensor->size(), r.tensor->grad().data());
    off += r.tensor->size();
  }
}

// Adds lambda * d(sum w^2)/dw for the weights of the networks in [first, last).
void add_weight_decay(std::vector<Network>& chain, std::size_t first, std::size_t last,
                      double lambda) {
  for (std::size_t i = first; i < last; ++i) {
    for (const ParameterRef& r : chain[i].parameters()) {
      if (r.name.ends_with(".bias")) continue;
      auto g = r.tensor->grad();
      auto w = r.tensor->data();
      for (std::size_t k = 0; k < w.size(); ++k) g[k] += 2.0 * lambda * w[k];
    }
  }
}

double weight_penalty(const std::vector<Network>& chain, Regularizer reg) {
  if (reg == Regularizer::kPsi3) return reg_psi3(chain.front());
  double s = 0.0;
  for (const Network& net : chain) s += reg_psi3(net);
  return s;
}

double holdout_mse(std::span<const Network> chain, const TrainingData& data, int threads) {
  const auto& rows = data.holdout_indices;
  if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t chunks = (rows.size() + kChunk - 1) / kChunk;
  std::vector<double> sse(chunks, 0.0);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t b = c * kChunk, e = std::min(rows.size(), b + kChunk);
    const std::span<const std::size_t> part(rows.data() + b, e - b);
    const Tensor out = run_chain(chain, gather(data, part, false));
    const Tensor tgt = gather(data, part, true);
    double s = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) s += (out[k] - tgt[k]) * (out[k] - tgt[k]);
    sse[c] = s;
  });
  return std::accumulate(sse.begin(), sse.end(), 0.0) / static_cast<double>(rows.size());
}

std::string checkpoint_hash(const TrainConfig& config, const TrainOptions& opts) {
  return opts.checkpoint_hash.empty() ? config.hash() : opts.checkpoint_hash;
}

void dump_failure(const TrainOptions& opts, const std::vector<Network>& chain,
                  const TrainConfig& config, std::size_t epoch, std::size_t batch_index,
                  std::span<const std::size_t> rows) {
  if (opts.out_dir.empty()) return;
  std::filesystem::create_directories(opts.out_dir);
  save_checkpoint(Checkpoint{chain, config.seed, checkpoint_hash(config, opts), opts.metadata},
                  opts.out_dir / "last_good.ckpt");
  const json j = {{"epoch", epoch + 1},
                  {"batch", batch_index},
                  {"indices", std::vector<std::size_t>(rows.begin(), rows.end())}};
  write_text(opts.out_dir / "nan_batch.json", j.dump(1) + "\n");
}

}  // namespace

TrainHistory train(std::vector<Network>& chain, const TrainingData& data,
                   const TrainConfig& config, const TrainOptions& opts) {
  if (chain.empty()) throw ConfigError("nothing to train");
  config.validate(data.train_indices.size());
  if (config.reg == Regularizer::kPsi1 && chain.size() < 2) {
    throw ConfigError("psi1 needs an encoder followed by a decoder");
  }
  const auto started = std::chrono::steady_clock::now();
  const std::size_t n_params = total_parameters(chain);
  std::vector<ParameterRef> refs = all_parameters(chain);
  Adam adam(AdamConfig{config.lr});
  std::mt19937_64 shuffle_rng(mix_seed(config.seed, kShuffle));
  std::mt19937_64 neighbor_rng(mix_seed(config.seed, kNeighbor));
  const std::size_t code_size = shape_size(chain.front().spec().output_shape());

  TrainHistory hist;
  std::vector<std::size_t> order = data.train_indices;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_sse = 0.0, epoch_reg = 0.0;
    std::size_t seen = 0, batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t b = std::min(config.batch, order.size() - start);
      // A trailing singleton cannot be paired; fold it into the next epoch.
      if (b < 2 && config.reg == Regularizer::kPsi1) break;
      const std::span<const std::size_t> rows(order.data() + start, b);
      const double scale = 1.0 / static_cast<double>(b);

      // psi1 couples samples through their codes, so codes come first.
      std::vector<double> code_grad;
      double reg_value = 0.0;
      if (config.reg == Regularizer::kPsi1) {
        const std::vector<std::size_t> nb = pick_neighbor(b, neighbor_rng);
        std::vector<double> z(b * code_size);
        const std::size_t chunks = (b + kChunk - 1) / kChunk;
        parallel_for(chunks, opts.threads, [&](std::size_t c) {
          const std::size_t lo = c * kChunk, hi = std::min(b, lo + kChunk);
          const Tensor out = chain.front().forward(gather(data, rows.subspan(lo, hi - lo), false));
          std::copy(out.data().begin(), out.data().end(), z.begin() + static_cast<std::ptrdiff_t>(lo * code_size));
        });
        code_grad.assign(b * code_size, 0.0);
        const std::size_t xs = data.input_size();
        for (std::size_t i = 0; i < b; ++i) {
          const std::size_t j = nb[i];
          const double* xi = data.input(rows[i]);
          const double* xj = data.input(rows[j]);
          double dx = 0.0, dz = 0.0;
          for (std::size_t k = 0; k < xs; ++k) dx += (xi[k] - xj[k]) * (xi[k] - xj[k]);
          for (std::size_t k = 0; k < code_size; ++k) {
            dz += (z[i * code_size + k] - z[j * code_size + k]) * (z[i * code_size + k] - z[j * code_size + k]);
          }
          const double e = dx - dz;
          reg_value += e * e * scale;
          for (std::size_t k = 0; k < code_size; ++k) {
            const double g = 4.0 * config.lambda * scale * e * (z[i * code_size + k] - z[j * code_size + k]);
            code_grad[i * code_size + k] -= g;
            code_grad[j * code_size + k] += g;
          }
        }
      }

      const std::size_t chunks = (b + kChunk - 1) / kChunk;
      std::vector<std::vector<double>> grads(chunks);
      std::vector<double> sse(chunks, 0.0);
      parallel_for(chunks, opts.threads, [&](std::size_t c) {
        const std::size_t lo = c * kChunk, hi = std::min(b, lo + kChunk);
        const auto part = rows.subspan(lo, hi - lo);
        grads[c].assign(n_params, 0.0);
        const std::span<const double> cg =
            code_grad.empty() ? std::span<const double>()
                              : std::span<const double>(code_grad).subspan(lo * code_size, (hi - lo) * code_size);
        sse[c] = chunk_pass(chain, gather(data, part, false), gather(data, part, true), scale, cg,
                            grads[c]);
      });
      std::vector<double> flat(n_params, 0.0);
      double batch_sse = 0.0;
      for (std::size_t c = 0; c < chunks; ++c) {
        for (std::size_t k = 0; k < n_params; ++k) flat[k] += grads[c][k];
        batch_sse += sse[c];
      }
      if (!std::isfinite(batch_sse) || !std::isfinite(reg_value)) {
        dump_failure(opts, chain, config, epoch, batches, rows);
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(batches));
      }
      write_grads(refs, flat);
      if (config.reg == Regularizer::kPsi3) add_weight_decay(chain, 0, 1, config.lambda);
      if (config.reg == Regularizer::kPsi2) add_weight_decay(chain, 0, chain.size(), config.lambda);
      try {
        adam.step(refs);
      } catch (const NumericError&) {
        dump_failure(opts, chain, config, epoch, batches, rows);
        throw;
      }
      epoch_sse += batch_sse;
      epoch_reg += reg_value * static_cast<double>(b);
      seen += b;
      ++batches;
    }
    hist.train_mse.push_back(epoch_sse / static_cast<double>(seen));
    hist.holdout_mse.push_back(holdout_mse(chain, data, opts.threads));
    if (config.reg == Regularizer::kPsi1) {
      hist.reg_value.push_back(epoch_reg / static_cast<double>(seen));
    } else if (config.reg == Regularizer::kNone) {
      hist.reg_value.push_back(0.0);
    } else {
      hist.reg_value.push_back(weight_penalty(chain, config.reg));
    }
    hist.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (opts.on_epoch) opts.on_epoch(epoch, hist);
  }

  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    write_text(opts.out_dir / "history.csv", hist.to_csv());
    save_checkpoint(Checkpoint{chain, config.seed, checkpoint_hash(config, opts), opts.metadata},
                    opts.out_dir / "model.ckpt");
  }
  return hist;
}

std::vector<Network> build_disk_autoencoder(const TrainConfig& config) {
  return {Network::build(disk_encoder_spec(config.with_bias), mix_seed(config.seed, kEncoderInit)),
          Network::build(disk_decoder_spec(config.with_bias), mix_seed(config.seed, kDecoderInit))};
}

std::vector<Network> build_position_encoder(const TrainConfig& config) {
  return {Network::build(position_encoder_spec(config.with_bias),
                         mix_seed(config.seed, kEncoderInit))};
}

std::vector<Network> build_position_decoder(const TrainConfig& config) {
  return {Network::build(position_decoder_spec(config.with_bias),
                         mix_seed(config.seed, kDecoderInit))};
}

double chain_loss_and_grad(std::vector<Network>& chain, const Tensor& input,
                           const Tensor& target, bool with_grad) {
  const std::size_t b = input.extent(0);
  std::vector<double> flat(total_parameters(chain), 0.0);
  const double sse = chunk_pass(chain, input, target, 1.0 / static_cast<double>(b), {}, flat);
  if (with_grad) {
    std::vector<ParameterRef> refs = all_parameters(chain);
    write_grads(refs, flat);
  }
  return sse / static_cast<double>(b);
}

}  // namespace geoae
