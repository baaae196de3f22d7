// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geoae/network.hpp"

namespace geoae {

/// One or more networks (encoder first for autoencoders) with provenance.
///
/// On disk: a single-line JSON header {"specs", "seed", "train_config_hash",
/// "metadata"}, a newline, then every network's parameters as little-endian
/// float64 in layer order, weights then bias.
struct Checkpoint {
  std::vector<Network> networks;
  std::uint64_t seed = 0;
  std::string train_config_hash;
  /// Free-form JSON object text carried through unchanged.
  std::string metadata = "{}";
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
/// Throws ConfigError on a malformed header or a parameter block whose length
/// does not match the specs.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const std::string& text);

}  // namespace geoae
