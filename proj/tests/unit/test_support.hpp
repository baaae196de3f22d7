// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "geoae/tensor.hpp"

namespace geoae::testing {

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Tensor t(shape);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace geoae::testing
