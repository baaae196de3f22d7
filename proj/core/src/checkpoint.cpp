// SPDX-License-Identifier: Apache-2.0
#include "geoae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "geoae/errors.hpp"
#include "geoae/io.hpp"
#include "json.hpp"

namespace geoae {

using nlohmann::json;

namespace {

json spec_json(const NetworkSpec& spec) {
  json layers = json::array();
  for (const LayerSpec& l : spec.layers) {
    layers.push_back({{"kind", l.kind == LayerKind::kDown ? "down" : "up"},
                      {"in", l.in_channels},
                      {"out", l.out_channels},
                      {"bias", l.has_bias},
                      {"alpha", l.alpha},
                      {"dims", l.dims}});
  }
  return {{"name", spec.name}, {"input_shape", spec.input_shape}, {"layers", layers}};
}

NetworkSpec spec_from(const json& j) {
  NetworkSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.input_shape = j.at("input_shape").get<Shape>();
  for (const json& l : j.at("layers")) {
    const std::string kind = l.at("kind").get<std::string>();
    if (kind != "down" && kind != "up") throw ConfigError("unknown layer kind '" + kind + "'");
    spec.layers.push_back(LayerSpec{kind == "down" ? LayerKind::kDown : LayerKind::kUp,
                                    l.at("in").get<std::size_t>(),
                                    l.at("out").get<std::size_t>(), l.at("bias").get<bool>(),
                                    l.at("alpha").get<double>(), l.at("dims").get<int>()});
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(spec.name + ": " + e.what());
  }
  return spec;
}

}  // namespace

std::string spec_to_json(const NetworkSpec& spec) { return spec_json(spec).dump(); }

NetworkSpec spec_from_json(const std::string& text) {
  try {
    return spec_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed network spec: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json header;
  header["specs"] = json::array();
  for (const Network& n : ckpt.networks) header["specs"].push_back(spec_json(n.spec()));
  header["seed"] = ckpt.seed;
  header["train_config_hash"] = ckpt.train_config_hash;
  header["metadata"] = json::parse(ckpt.metadata);

  std::string bytes = header.dump() + "\n";
  for (const Network& n : ckpt.networks) {
    for (double v : n.flat_parameters()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      char le[8];
      for (int i = 0; i < 8; ++i) le[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
      bytes.append(le, 8);
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_text(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_text(path);
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string::npos) throw ConfigError(path.string() + ": missing header line");
  Checkpoint ckpt;
  std::vector<NetworkSpec> specs;
  try {
    const json header = json::parse(bytes.substr(0, eol));
    for (const json& s : header.at("specs")) specs.push_back(spec_from(s));
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.train_config_hash = header.at("train_config_hash").get<std::string>();
    ckpt.metadata = header.value("metadata", json::object()).dump();
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": malformed checkpoint header: " + e.what());
  }

  std::size_t offset = eol + 1;
  for (const NetworkSpec& spec : specs) {
    Network net = Network::build(spec, 0);
    std::vector<double> flat(net.parameter_count());
    if (bytes.size() < offset + 8 * flat.size()) {
      throw ConfigError(path.string() + ": parameter block too short for " + spec.name);
    }
    for (double& v : flat) {
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
      }
      v = std::bit_cast<double>(bits);
      offset += 8;
    }
    net.set_flat_parameters(flat);
    ckpt.networks.push_back(std::move(net));
  }
  if (offset != bytes.size()) {
    throw ConfigError(path.string() + ": " + std::to_string(bytes.size() - offset) +
                      " trailing bytes after the parameter block");
  }
  return ckpt;
}

}  // namespace geoae
