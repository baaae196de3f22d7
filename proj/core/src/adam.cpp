// SPDX-License-Identifier: Apache-2.0
#include "geoae/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "geoae/errors.hpp"

namespace geoae {

void Adam::step(std::span<const ParameterRef> params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.tensor->size(), 0.0);
      v_.emplace_back(p.tensor->size(), 0.0);
    }
  }
  if (m_.size() != params.size()) {
    throw std::invalid_argument("Adam: parameter count changed from " +
                                std::to_string(m_.size()) + " to " +
                                std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor& t = *params[k].tensor;
    if (!t.has_grad() || m_[k].size() != t.size()) {
      throw std::invalid_argument("Adam: state/gradient layout mismatch for '" +
                                  params[k].name + "'");
    }
    for (double g : t.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter '" + params[k].name + "'");
      }
    }
  }

  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& t = *params[k].tensor;
    auto x = t.data();
    auto g = t.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      x[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace geoae
