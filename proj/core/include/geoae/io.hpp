// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geoae {

/// Little-endian float64 array files.
void write_f64(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f64(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// splitmix64 of (seed, stream); independent seeds for sub-tasks.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace geoae
