#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace hypergat {

// Central-difference check of an analytic gradient. f evaluates the scalar
// objective at x (x is mutated in place during probing and restored after).
// Returns the maximum relative error
//   |a - n| / max(1e-8, |a| + |n|)
// over all coordinates; callers assert against their tolerance. Meant for
// 64-bit mode; eps defaults to 1e-5.
template <typename F>
double grad_check(F&& f, std::vector<double>& x,
                  const std::vector<double>& analytic, double eps = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double fp = f(x);
    x[i] = saved - eps;
    const double fm = f(x);
    x[i] = saved;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = analytic[i];
    const double rel =
        std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace hypergat
