#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hypergat/error.hpp"

namespace hypergat {

// Dense row-major matrix. Scalar is float in training builds and double in
// the test suite; the choice is a run-wide template parameter, never mixed.
template <typename Scalar>
struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Scalar> data;

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c, Scalar fill = Scalar(0))
      : rows(r), cols(c), data(r * c, fill) {}

  Scalar& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  Scalar at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<Scalar> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const Scalar> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }

  std::size_t size() const { return data.size(); }

  void zero() { data.assign(data.size(), Scalar(0)); }
};

template <typename Scalar>
bool all_finite(std::span<const Scalar> v) {
  for (Scalar x : v) {
    if (!std::isfinite(static_cast<double>(x))) return false;
  }
  return true;
}

template <typename Scalar>
void ensure_finite(std::span<const Scalar> v, const std::string& what) {
  if (!all_finite(v)) throw NumericError("non-finite values in " + what);
}

template <typename Scalar>
void ensure_finite(const Tensor2<Scalar>& t, const std::string& what) {
  ensure_finite(std::span<const Scalar>(t.data), what);
}

}  // namespace hypergat
