// SPDX-License-Identifier: Apache-2.0
#include "geoae/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace geoae {

GradCheckReport grad_check(std::span<const ParameterRef> params,
                           const Objective& objective,
                           const GradCheckOptions& options) {
  for (const auto& p : params) p.tensor->enable_grad();
  objective(true);

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::vector<std::vector<double>> analytic;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto g = params[k].tensor->grad();
    analytic.emplace_back(g.begin(), g.end());
    for (std::size_t i = 0; i < g.size(); ++i) coords.emplace_back(k, i);
  }
  if (options.max_coordinates > 0 && coords.size() > options.max_coordinates) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.max_coordinates);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport report;
  auto record = [&](double a, double numeric, const std::string& name, std::size_t index) {
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double err = std::abs(a - numeric) / denom;
    ++report.coordinates_checked;
    if (err > report.max_relative_error || report.coordinates_checked == 1) {
      report.max_relative_error = err;
      report.worst_parameter = name;
      report.worst_index = index;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  };

  if (options.directions > 0) {
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;
    std::vector<double> saved, v(coords.size());
    for (const auto& [k, i] : coords) saved.push_back(params[k].tensor->data()[i]);
    auto shift = [&](double t) {
      for (std::size_t c = 0; c < coords.size(); ++c) {
        params[coords[c].first].tensor->data()[coords[c].second] = saved[c] + t * v[c];
      }
    };
    for (std::size_t d = 0; d < options.directions; ++d) {
      double norm = 0.0;
      for (double& x : v) {
        x = normal(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      double a = 0.0;
      for (std::size_t c = 0; c < coords.size(); ++c) {
        v[c] /= norm;
        a += analytic[coords[c].first][coords[c].second] * v[c];
      }
      shift(options.epsilon);
      const double up = objective(false);
      shift(-options.epsilon);
      const double down = objective(false);
      shift(0.0);
      record(a, (up - down) / (2.0 * options.epsilon), "direction", d);
    }
    return report;
  }

  for (const auto& [k, i] : coords) {
    double& x = params[k].tensor->data()[i];
    const double saved = x;
    x = saved + options.epsilon;
    const double up = objective(false);
    x = saved - options.epsilon;
    const double down = objective(false);
    x = saved;
    record(analytic[k][i], (up - down) / (2.0 * options.epsilon), params[k].name, i);
  }
  return report;
}

}  // namespace geoae
