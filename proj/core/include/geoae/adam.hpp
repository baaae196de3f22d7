// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "geoae/tensor.hpp"

namespace geoae {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are allocated lazily on the first step
/// and must keep the same layout afterwards.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Updates every parameter in place from its gradient slot.
  /// Throws NumericError naming the first parameter with a non-finite gradient;
  /// nothing is modified in that case.
  void step(std::span<const ParameterRef> params);

  std::int64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }
  std::span<const std::vector<double>> first_moments() const { return m_; }
  std::span<const std::vector<double>> second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace geoae
