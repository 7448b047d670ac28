#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hypergat/error.hpp"
#include "hypergat/tensor.hpp"

namespace hypergat {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment accumulators for one parameter buffer.
template <typename S>
struct AdamMoments {
  std::vector<S> m;
  std::vector<S> v;

  explicit AdamMoments(std::size_t n = 0) : m(n, S(0)), v(n, S(0)) {}
};

// One bias-corrected Adam update. step is the 1-based count including this
// update. Rejects non-finite gradients, naming the parameter.
template <typename S>
void adam_step(std::span<S> param, std::span<const S> grad,
               AdamMoments<S>& mom, std::int64_t step, double lr,
               const AdamConfig& cfg, const std::string& param_name) {
  if (param.size() != grad.size() || mom.m.size() != param.size())
    throw std::logic_error("adam_step shape mismatch for " + param_name);
  if (!all_finite(grad))
    throw NumericError("non-finite gradient for parameter " + param_name);
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    const double m = b1 * mom.m[i] + (1.0 - b1) * g;
    const double v = b2 * mom.v[i] + (1.0 - b2) * g * g;
    mom.m[i] = static_cast<S>(m);
    mom.v[i] = static_cast<S>(v);
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    param[i] -= static_cast<S>(lr * mhat / (std::sqrt(vhat) + cfg.eps));
  }
}

}  // namespace hypergat
