#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "hypergat/error.hpp"
#include "hypergat/rng.hpp"
#include "hypergat/tensor.hpp"

namespace hypergat {

enum class Mode { train, eval };

// Contiguous groups within a flat score vector. offsets is strictly
// increasing, starts at 0, ends at the vector length; every group non-empty.
struct Segments {
  std::vector<std::size_t> offsets;

  std::size_t count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t total() const { return offsets.empty() ? 0 : offsets.back(); }

  void validate(std::size_t n) const {
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != n)
      throw std::logic_error("segments do not cover the vector");
    for (std::size_t s = 1; s < offsets.size(); ++s)
      if (offsets[s] <= offsets[s - 1])
        throw std::logic_error("empty or non-monotone segment");
  }
};

// ---------------------------------------------------------------------------
// matmul

template <typename S>
Tensor2<S> matmul(const Tensor2<S>& a, const Tensor2<S>& b) {
  if (a.cols != b.rows) throw std::logic_error("matmul shape mismatch");
  Tensor2<S> c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const S* arow = a.data.data() + i * a.cols;
    S* crow = c.data.data() + i * c.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const S aik = arow[k];
      if (aik == S(0)) continue;
      const S* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

// C = A B^T. Both operands walk row-major, which also suits weight matrices
// stored output-row x input-col.
template <typename S>
Tensor2<S> matmul_nt(const Tensor2<S>& a, const Tensor2<S>& b) {
  if (a.cols != b.cols) throw std::logic_error("matmul_nt shape mismatch");
  Tensor2<S> c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const S* arow = a.data.data() + i * a.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const S* brow = b.data.data() + j * b.cols;
      S acc = S(0);
      for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      c.at(i, j) = acc;
    }
  }
  return c;
}

// For C = A B^T: dA += dC B, dB += dC^T A. Either output may be null.
template <typename S>
void matmul_nt_backward(const Tensor2<S>& dc, const Tensor2<S>& a,
                        const Tensor2<S>& b, Tensor2<S>* da, Tensor2<S>* db) {
  if (dc.rows != a.rows || dc.cols != b.rows || a.cols != b.cols)
    throw std::logic_error("matmul_nt_backward shape mismatch");
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      const S d = dc.at(i, j);
      if (d == S(0)) continue;
      if (da)
        for (std::size_t k = 0; k < a.cols; ++k) da->at(i, k) += d * b.at(j, k);
      if (db)
        for (std::size_t k = 0; k < a.cols; ++k) db->at(j, k) += d * a.at(i, k);
    }
}

// dA += dC B^T, dB += A^T dC. Either output may be null.
template <typename S>
void matmul_backward(const Tensor2<S>& dc, const Tensor2<S>& a,
                     const Tensor2<S>& b, Tensor2<S>* da, Tensor2<S>* db) {
  if (dc.rows != a.rows || dc.cols != b.cols || a.cols != b.rows)
    throw std::logic_error("matmul_backward shape mismatch");
  if (da) {
    if (da->rows != a.rows || da->cols != a.cols)
      throw std::logic_error("matmul_backward dA shape mismatch");
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t j = 0; j < b.cols; ++j) {
        const S d = dc.at(i, j);
        if (d == S(0)) continue;
        for (std::size_t k = 0; k < a.cols; ++k)
          da->at(i, k) += d * b.at(k, j);
      }
  }
  if (db) {
    if (db->rows != b.rows || db->cols != b.cols)
      throw std::logic_error("matmul_backward dB shape mismatch");
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t k = 0; k < a.cols; ++k) {
        const S aik = a.at(i, k);
        if (aik == S(0)) continue;
        for (std::size_t j = 0; j < b.cols; ++j)
          db->at(k, j) += aik * dc.at(i, j);
      }
  }
}

// ---------------------------------------------------------------------------
// one-hot input: multiplying W (d_out x |V|) by a one-hot column collapses to
// column selection, so the n x |V| attribute matrix is never materialized.

template <typename S>
Tensor2<S> one_hot_linear(const Tensor2<S>& w, std::span<const int> ids) {
  Tensor2<S> out(ids.size(), w.rows);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= w.cols)
      throw std::logic_error("one_hot_linear: attribute id out of range");
    for (std::size_t r = 0; r < w.rows; ++r) out.at(i, r) = w.at(r, id);
  }
  return out;
}

// Gradient only touches the selected columns of W.
template <typename S>
void one_hot_linear_backward(const Tensor2<S>& dout, std::span<const int> ids,
                             Tensor2<S>& dw) {
  if (dout.rows != ids.size() || dout.cols != dw.rows)
    throw std::logic_error("one_hot_linear_backward shape mismatch");
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t r = 0; r < dw.rows; ++r)
      dw.at(r, ids[i]) += dout.at(i, r);
}

// ---------------------------------------------------------------------------
// segment softmax (max-shifted within each segment)

template <typename S>
std::vector<S> segment_softmax(const std::vector<S>& scores,
                               const Segments& seg) {
  seg.validate(scores.size());
  std::vector<S> w(scores.size());
  for (std::size_t s = 0; s + 1 < seg.offsets.size(); ++s) {
    const std::size_t lo = seg.offsets[s], hi = seg.offsets[s + 1];
    S mx = scores[lo];
    for (std::size_t k = lo + 1; k < hi; ++k) mx = std::max(mx, scores[k]);
    S sum = S(0);
    for (std::size_t k = lo; k < hi; ++k) {
      w[k] = std::exp(scores[k] - mx);
      sum += w[k];
    }
    for (std::size_t k = lo; k < hi; ++k) w[k] /= sum;
  }
  return w;
}

// Standard softmax Jacobian per segment:
// ds_k = w_k * (dw_k - sum_p w_p dw_p)
template <typename S>
std::vector<S> segment_softmax_backward(const std::vector<S>& weights,
                                        const std::vector<S>& dweights,
                                        const Segments& seg) {
  seg.validate(weights.size());
  if (dweights.size() != weights.size())
    throw std::logic_error("segment_softmax_backward size mismatch");
  std::vector<S> ds(weights.size());
  for (std::size_t s = 0; s + 1 < seg.offsets.size(); ++s) {
    const std::size_t lo = seg.offsets[s], hi = seg.offsets[s + 1];
    S dot = S(0);
    for (std::size_t k = lo; k < hi; ++k) dot += weights[k] * dweights[k];
    for (std::size_t k = lo; k < hi; ++k)
      ds[k] = weights[k] * (dweights[k] - dot);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// activations; the derivative at exactly 0 is slope (leaky) / 0 (relu)

template <typename S>
S leaky_relu(S x, S slope) {
  return x > S(0) ? x : slope * x;
}

template <typename S>
S leaky_relu_grad(S x, S slope) {
  return x > S(0) ? S(1) : slope;
}

template <typename S>
S relu(S x) {
  return x > S(0) ? x : S(0);
}

template <typename S>
S relu_grad(S x) {
  return x > S(0) ? S(1) : S(0);
}

template <typename S>
Tensor2<S> leaky_relu(const Tensor2<S>& x, S slope) {
  Tensor2<S> y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.size(); ++i)
    y.data[i] = leaky_relu(x.data[i], slope);
  return y;
}

template <typename S>
Tensor2<S> relu(const Tensor2<S>& x) {
  Tensor2<S> y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = relu(x.data[i]);
  return y;
}

// ---------------------------------------------------------------------------
// inverted dropout: survivors scaled by 1/(1-p) at train time, eval is the
// identity. The mask holds the per-entry scale and is reused by backward.

template <typename S>
std::vector<S> dropout_mask(std::size_t n, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw UsageError("dropout rate must be in [0, 1)");
  std::vector<S> scale(n);
  if (p == 0.0) {
    std::fill(scale.begin(), scale.end(), S(1));
    return scale;
  }
  const S keep = S(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < n; ++i)
    scale[i] = rng.next_double() < p ? S(0) : keep;
  return scale;
}

template <typename S>
void apply_scale(std::span<S> x, std::span<const S> scale) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= scale[i];
}

// ---------------------------------------------------------------------------
// readout

template <typename S>
std::vector<S> mean_pool_rows(const Tensor2<S>& h) {
  if (h.rows == 0) throw std::logic_error("mean_pool_rows: zero rows");
  std::vector<S> z(h.cols, S(0));
  for (std::size_t i = 0; i < h.rows; ++i)
    for (std::size_t j = 0; j < h.cols; ++j) z[j] += h.at(i, j);
  const S inv = S(1) / S(h.rows);
  for (S& v : z) v *= inv;
  return z;
}

template <typename S>
void mean_pool_rows_backward(std::span<const S> dz, Tensor2<S>& dh) {
  const S inv = S(1) / S(dh.rows);
  for (std::size_t i = 0; i < dh.rows; ++i)
    for (std::size_t j = 0; j < dh.cols; ++j) dh.at(i, j) += dz[j] * inv;
}

// ---------------------------------------------------------------------------
// loss = -log softmax(logits)[label]; dlogits = softmax(logits) - onehot

template <typename S>
std::pair<S, std::vector<S>> softmax_cross_entropy(std::span<const S> logits,
                                                   int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw std::logic_error("softmax_cross_entropy: label out of range");
  S mx = logits[0];
  for (S v : logits) mx = std::max(mx, v);
  S sum = S(0);
  std::vector<S> d(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    d[c] = std::exp(logits[c] - mx);
    sum += d[c];
  }
  for (S& v : d) v /= sum;
  const S loss = -(logits[label] - mx - std::log(sum));
  d[label] -= S(1);
  return {loss, std::move(d)};
}

}  // namespace hypergat
