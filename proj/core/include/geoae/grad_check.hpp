// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "geoae/tensor.hpp"

namespace geoae {

/// Evaluates the loss at the current parameter values. When `with_grad` is
/// true it must also overwrite the gradient slots of the checked parameters.
using Objective = std::function<double(bool with_grad)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// 0 checks every coordinate; otherwise a seeded random subset of this size.
  std::size_t max_coordinates = 0;
  /// When nonzero, checks this many seeded random unit directions (the
  /// directional derivative g.v) instead of individual coordinates.
  std::size_t directions = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares analytic gradients against central differences. The relative
/// error of a coordinate is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(std::span<const ParameterRef> params,
                           const Objective& objective,
                           const GradCheckOptions& options = {});

}  // namespace geoae
