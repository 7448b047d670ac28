#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hypergat/error.hpp"
#include "hypergat/hypergraph.hpp"
#include "hypergat/ops.hpp"
#include "hypergat/rng.hpp"
#include "hypergat/tensor.hpp"

namespace hypergat {

inline constexpr double kLeakySlope = 0.2;

enum class Variant { full, no_attention };

inline const char* variant_name(Variant v) {
  return v == Variant::full ? "full" : "no_attention";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "no_attention") return Variant::no_attention;
  throw UsageError("unknown variant '" + s + "' (expected full or no_attention)");
}

// One dual-attention layer. w1 projects incoming node features (d x d_prev),
// w2 re-projects aggregated edge features (d x d). a1 scores nodes within an
// edge; a2 scores [w2 f_j || w1 h_i], so its first d entries weigh the edge
// half and the last d the node half.
template <typename S>
struct LayerParams {
  Tensor2<S> w1;
  Tensor2<S> w2;
  std::vector<S> a1;
  std::vector<S> a2;
};

template <typename S>
struct HyperGATModel {
  std::vector<int> dims;  // [d_in = |V|, d_1, ..., d_L]
  int classes = 0;
  Variant variant = Variant::full;
  double dropout_p = 0.0;
  std::vector<LayerParams<S>> layers;
  Tensor2<S> wc;          // classes x d_L
  std::vector<S> bc;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int n_layers() const { return static_cast<int>(layers.size()); }
};

namespace detail {

template <typename S>
void fill_glorot(std::span<S> out, std::size_t fan_in, std::size_t fan_out,
                 Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (S& v : out)
    v = static_cast<S>((2.0 * rng.next_double() - 1.0) * limit);
}

}  // namespace detail

template <typename S>
HyperGATModel<S> init_model(const std::vector<int>& dims, int classes,
                            Variant variant, double dropout_p,
                            std::uint64_t seed) {
  if (dims.size() < 2) throw UsageError("need at least one layer of dims");
  for (int d : dims)
    if (d <= 0) throw UsageError("layer dims must be positive");
  if (classes < 2) throw UsageError("need at least two classes");

  HyperGATModel<S> model;
  model.dims = dims;
  model.classes = classes;
  model.variant = variant;
  model.dropout_p = dropout_p;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto d_prev = static_cast<std::size_t>(dims[l]);
    const auto d = static_cast<std::size_t>(dims[l + 1]);
    LayerParams<S> lp;
    lp.w1 = Tensor2<S>(d, d_prev);
    detail::fill_glorot<S>(lp.w1.data, d_prev, d, rng);
    lp.w2 = Tensor2<S>(d, d);
    detail::fill_glorot<S>(lp.w2.data, d, d, rng);
    lp.a1.resize(d);
    detail::fill_glorot<S>(lp.a1, d, 1, rng);
    lp.a2.resize(2 * d);
    detail::fill_glorot<S>(lp.a2, 2 * d, 1, rng);
    model.layers.push_back(std::move(lp));
  }
  const auto d_last = static_cast<std::size_t>(dims.back());
  model.wc = Tensor2<S>(static_cast<std::size_t>(classes), d_last);
  detail::fill_glorot<S>(model.wc.data, d_last, static_cast<std::size_t>(classes),
                         rng);
  model.bc.assign(static_cast<std::size_t>(classes), S(0));
  return model;
}

// Gradient buffers with the exact shapes of the model parameters.
template <typename S>
struct ModelGrads {
  std::vector<LayerParams<S>> layers;
  Tensor2<S> wc;
  std::vector<S> bc;

  explicit ModelGrads(const HyperGATModel<S>& m) { reset(m); }

  void reset(const HyperGATModel<S>& m) {
    layers.clear();
    for (const auto& lp : m.layers) {
      LayerParams<S> g;
      g.w1 = Tensor2<S>(lp.w1.rows, lp.w1.cols);
      g.w2 = Tensor2<S>(lp.w2.rows, lp.w2.cols);
      g.a1.assign(lp.a1.size(), S(0));
      g.a2.assign(lp.a2.size(), S(0));
      layers.push_back(std::move(g));
    }
    wc = Tensor2<S>(m.wc.rows, m.wc.cols);
    bc.assign(m.bc.size(), S(0));
  }

  void zero() {
    for (auto& g : layers) {
      g.w1.zero();
      g.w2.zero();
      std::fill(g.a1.begin(), g.a1.end(), S(0));
      std::fill(g.a2.begin(), g.a2.end(), S(0));
    }
    wc.zero();
    std::fill(bc.begin(), bc.end(), S(0));
  }
};

// Visits every parameter vector paired with its gradient buffer in a stable
// declared order. `regularized` is false only for the classifier bias.
template <typename S, typename Fn>
void for_each_param(HyperGATModel<S>& model, ModelGrads<S>& grads, Fn&& fn) {
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    fn(prefix + "w1", model.layers[l].w1.data, grads.layers[l].w1.data, true);
    fn(prefix + "w2", model.layers[l].w2.data, grads.layers[l].w2.data, true);
    fn(prefix + "a1", model.layers[l].a1, grads.layers[l].a1, true);
    fn(prefix + "a2", model.layers[l].a2, grads.layers[l].a2, true);
  }
  fn(std::string("classifier.w"), model.wc.data, grads.wc.data, true);
  fn(std::string("classifier.b"), model.bc, grads.bc, false);
}

template <typename S>
double l2_penalty(const HyperGATModel<S>& model) {
  double acc = 0.0;
  auto add = [&acc](const std::vector<S>& v) {
    for (S x : v) acc += static_cast<double>(x) * static_cast<double>(x);
  };
  for (const auto& lp : model.layers) {
    add(lp.w1.data);
    add(lp.w2.data);
    add(lp.a1);
    add(lp.a2);
  }
  add(model.wc.data);
  return acc;
}

// ---------------------------------------------------------------------------
// forward

// Everything the backward pass reads, kept per layer. Score vectors are only
// populated by the attention variant; the uniform variant stores the constant
// alpha/beta weights and skips the score paths entirely.
template <typename S>
struct LayerCache {
  std::vector<S> scales;    // layer 0: per-node dropout scale of the one-hot
  Tensor2<S> hd;            // layers >= 1: dropout-applied input
  Tensor2<S> mask;          // layers >= 1: the dropout scales
  Tensor2<S> p;             // n x d, w1-projected nodes
  Tensor2<S> u;             // LeakyReLU(p)
  std::vector<S> node_score;  // n: a1 . u_k
  std::vector<S> alpha;       // edge-major flat weights
  Tensor2<S> g;             // m x d, attention-aggregated node projections
  Tensor2<S> f;             // ReLU(g), the edge representations
  Tensor2<S> q;             // m x d, w2-projected edges
  Tensor2<S> uq;            // LeakyReLU(q)
  std::vector<S> edge_score;  // m: a2_edge . uq_j
  std::vector<S> node_part;   // n: a2_node . u_i
  std::vector<S> beta;        // node-major flat weights
  Tensor2<S> r;             // n x d, attention-aggregated edge projections
  Tensor2<S> h;             // ReLU(r), the layer output
};

template <typename S>
struct ForwardCache {
  std::vector<LayerCache<S>> layers;
  std::vector<S> z;       // mean-pooled document embedding
  std::vector<S> logits;
};

template <typename S>
ForwardCache<S> forward(const HyperGATModel<S>& model, const TextHypergraph& hg,
                        const FlatIncidence& fi, Mode mode, Rng* rng) {
  const std::size_t n = static_cast<std::size_t>(hg.n_nodes());
  const std::size_t m = static_cast<std::size_t>(hg.n_edges());
  for (int id : hg.node_word_ids)
    if (id < 0 || id >= model.input_dim())
      throw DataError("node word id " + std::to_string(id) +
                      " outside model vocabulary of " +
                      std::to_string(model.input_dim()));
  const bool train = mode == Mode::train;
  if (train && rng == nullptr)
    throw std::logic_error("train-mode forward needs an rng");

  ForwardCache<S> cache;
  cache.layers.resize(model.layers.size());
  const Tensor2<S>* h_prev = nullptr;

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const LayerParams<S>& lp = model.layers[l];
    LayerCache<S>& lc = cache.layers[l];
    const std::size_t d = lp.w1.rows;

    if (l == 0) {
      lc.scales = train ? dropout_mask<S>(n, model.dropout_p, *rng)
                        : std::vector<S>(n, S(1));
      lc.p = one_hot_linear(lp.w1, hg.node_word_ids);
      for (std::size_t i = 0; i < n; ++i) {
        const S s = lc.scales[i];
        if (s == S(1)) continue;
        for (S& v : lc.p.row(i)) v *= s;
      }
    } else {
      lc.mask = Tensor2<S>(h_prev->rows, h_prev->cols);
      if (train) {
        auto flat = dropout_mask<S>(lc.mask.size(), model.dropout_p, *rng);
        std::copy(flat.begin(), flat.end(), lc.mask.data.begin());
      } else {
        std::fill(lc.mask.data.begin(), lc.mask.data.end(), S(1));
      }
      lc.hd = *h_prev;
      for (std::size_t i = 0; i < lc.hd.size(); ++i)
        lc.hd.data[i] *= lc.mask.data[i];
      lc.p = matmul_nt(lc.hd, lp.w1);
    }
    lc.u = leaky_relu(lc.p, S(kLeakySlope));

    // node-level attention: alpha over each edge's members
    std::vector<S> escore(fi.member_node.size());
    if (model.variant == Variant::full) {
      lc.node_score.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        S acc = S(0);
        auto uk = lc.u.row(k);
        for (std::size_t c = 0; c < d; ++c) acc += lp.a1[c] * uk[c];
        lc.node_score[k] = acc;
      }
      for (std::size_t s = 0; s < fi.member_node.size(); ++s)
        escore[s] = lc.node_score[static_cast<std::size_t>(fi.member_node[s])];
      lc.alpha = segment_softmax(escore, fi.edge_seg);
    } else {
      lc.alpha.resize(fi.member_node.size());
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t lo = fi.edge_seg.offsets[j];
        const std::size_t hi = fi.edge_seg.offsets[j + 1];
        const S w = S(1) / S(hi - lo);
        for (std::size_t s = lo; s < hi; ++s) lc.alpha[s] = w;
      }
    }

    lc.g = Tensor2<S>(m, d);
    for (std::size_t j = 0; j < m; ++j) {
      auto gj = lc.g.row(j);
      for (std::size_t s = fi.edge_seg.offsets[j]; s < fi.edge_seg.offsets[j + 1];
           ++s) {
        const S a = lc.alpha[s];
        auto pk = lc.p.row(static_cast<std::size_t>(fi.member_node[s]));
        for (std::size_t c = 0; c < d; ++c) gj[c] += a * pk[c];
      }
    }
    lc.f = relu(lc.g);
    lc.q = matmul_nt(lc.f, lp.w2);
    lc.uq = leaky_relu(lc.q, S(kLeakySlope));

    // edge-level attention: beta over each node's incident edges; the score
    // splits into an edge half and a node half of a2
    if (model.variant == Variant::full) {
      lc.edge_score.resize(m);
      for (std::size_t j = 0; j < m; ++j) {
        S acc = S(0);
        auto uqj = lc.uq.row(j);
        for (std::size_t c = 0; c < d; ++c) acc += lp.a2[c] * uqj[c];
        lc.edge_score[j] = acc;
      }
      lc.node_part.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        S acc = S(0);
        auto ui = lc.u.row(i);
        for (std::size_t c = 0; c < d; ++c) acc += lp.a2[d + c] * ui[c];
        lc.node_part[i] = acc;
      }
      std::vector<S> nscore(fi.incident_edge.size());
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = fi.node_seg.offsets[i];
             s < fi.node_seg.offsets[i + 1]; ++s)
          nscore[s] =
              lc.edge_score[static_cast<std::size_t>(fi.incident_edge[s])] +
              lc.node_part[i];
      lc.beta = segment_softmax(nscore, fi.node_seg);
    } else {
      lc.beta.resize(fi.incident_edge.size());
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = fi.node_seg.offsets[i];
        const std::size_t hi = fi.node_seg.offsets[i + 1];
        const S w = S(1) / S(hi - lo);
        for (std::size_t s = lo; s < hi; ++s) lc.beta[s] = w;
      }
    }

    lc.r = Tensor2<S>(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      auto ri = lc.r.row(i);
      for (std::size_t s = fi.node_seg.offsets[i]; s < fi.node_seg.offsets[i + 1];
           ++s) {
        const S b = lc.beta[s];
        auto qj = lc.q.row(static_cast<std::size_t>(fi.incident_edge[s]));
        for (std::size_t c = 0; c < d; ++c) ri[c] += b * qj[c];
      }
    }
    lc.h = relu(lc.r);
    h_prev = &lc.h;
  }

  cache.z = mean_pool_rows(*h_prev);
  cache.logits.resize(static_cast<std::size_t>(model.classes));
  for (std::size_t c = 0; c < cache.logits.size(); ++c) {
    S acc = model.bc[c];
    auto wrow = model.wc.row(c);
    for (std::size_t k = 0; k < cache.z.size(); ++k) acc += wrow[k] * cache.z[k];
    cache.logits[c] = acc;
  }
  ensure_finite(std::span<const S>(cache.logits), "logits");
  return cache;
}

// Matches forward()'s contract for models built with the uniform-weight
// variant; kept as a named entry point mirroring the attention forward.
template <typename S>
ForwardCache<S> forward_no_attention(const HyperGATModel<S>& model,
                                     const TextHypergraph& hg,
                                     const FlatIncidence& fi, Mode mode,
                                     Rng* rng) {
  if (model.variant != Variant::no_attention)
    throw std::logic_error("forward_no_attention requires the uniform variant");
  return forward(model, hg, fi, mode, rng);
}

// ---------------------------------------------------------------------------
// backward

template <typename S>
void backward(const HyperGATModel<S>& model, const TextHypergraph& hg,
              const FlatIncidence& fi, const ForwardCache<S>& cache,
              std::span<const S> dlogits, ModelGrads<S>& grads) {
  const std::size_t n = static_cast<std::size_t>(hg.n_nodes());
  const std::size_t m = static_cast<std::size_t>(hg.n_edges());
  const std::size_t d_last = static_cast<std::size_t>(model.output_dim());

  std::vector<S> dz(d_last, S(0));
  for (std::size_t c = 0; c < dlogits.size(); ++c) {
    const S dl = dlogits[c];
    grads.bc[c] += dl;
    auto wrow = model.wc.row(c);
    auto gwrow = grads.wc.row(c);
    for (std::size_t k = 0; k < d_last; ++k) {
      gwrow[k] += dl * cache.z[k];
      dz[k] += dl * wrow[k];
    }
  }
  Tensor2<S> dh(n, d_last);
  mean_pool_rows_backward(std::span<const S>(dz), dh);

  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const LayerParams<S>& lp = model.layers[li];
    LayerParams<S>& lg = grads.layers[li];
    const LayerCache<S>& lc = cache.layers[li];
    const std::size_t d = lp.w1.rows;
    const bool full = model.variant == Variant::full;

    Tensor2<S> dr(n, d);
    for (std::size_t i = 0; i < dr.size(); ++i)
      dr.data[i] = dh.data[i] * relu_grad(lc.r.data[i]);

    // undo edge aggregation: r_i = sum_j beta_ij q_j
    Tensor2<S> dq(m, d);
    std::vector<S> dbeta(fi.incident_edge.size());
    for (std::size_t i = 0; i < n; ++i) {
      auto dri = dr.row(i);
      for (std::size_t s = fi.node_seg.offsets[i]; s < fi.node_seg.offsets[i + 1];
           ++s) {
        const auto j = static_cast<std::size_t>(fi.incident_edge[s]);
        auto qj = lc.q.row(j);
        auto dqj = dq.row(j);
        S dot = S(0);
        const S b = lc.beta[s];
        for (std::size_t c = 0; c < d; ++c) {
          dot += dri[c] * qj[c];
          dqj[c] += b * dri[c];
        }
        dbeta[s] = dot;
      }
    }

    Tensor2<S> du(n, d);  // gradient reaching u through the score paths
    if (full) {
      const auto dscore = segment_softmax_backward(lc.beta, dbeta, fi.node_seg);
      std::vector<S> des(m, S(0));
      std::vector<S> dnode_part(n, S(0));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = fi.node_seg.offsets[i];
             s < fi.node_seg.offsets[i + 1]; ++s) {
          des[static_cast<std::size_t>(fi.incident_edge[s])] += dscore[s];
          dnode_part[i] += dscore[s];
        }
      for (std::size_t j = 0; j < m; ++j) {
        const S dj = des[j];
        if (dj == S(0)) continue;
        auto uqj = lc.uq.row(j);
        auto qj = lc.q.row(j);
        auto dqj = dq.row(j);
        for (std::size_t c = 0; c < d; ++c) {
          lg.a2[c] += dj * uqj[c];
          dqj[c] += dj * lp.a2[c] * leaky_relu_grad(qj[c], S(kLeakySlope));
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        const S di = dnode_part[i];
        if (di == S(0)) continue;
        auto ui = lc.u.row(i);
        auto dui = du.row(i);
        for (std::size_t c = 0; c < d; ++c) {
          lg.a2[d + c] += di * ui[c];
          dui[c] += di * lp.a2[d + c];
        }
      }
    }

    Tensor2<S> df(m, d);
    matmul_nt_backward(dq, lc.f, lp.w2, &df, &lg.w2);
    Tensor2<S> dg(m, d);
    for (std::size_t i = 0; i < dg.size(); ++i)
      dg.data[i] = df.data[i] * relu_grad(lc.g.data[i]);

    // undo node aggregation: g_j = sum_k alpha_jk p_k
    Tensor2<S> dp(n, d);
    std::vector<S> dalpha(fi.member_node.size());
    for (std::size_t j = 0; j < m; ++j) {
      auto dgj = dg.row(j);
      for (std::size_t s = fi.edge_seg.offsets[j]; s < fi.edge_seg.offsets[j + 1];
           ++s) {
        const auto k = static_cast<std::size_t>(fi.member_node[s]);
        auto pk = lc.p.row(k);
        auto dpk = dp.row(k);
        S dot = S(0);
        const S a = lc.alpha[s];
        for (std::size_t c = 0; c < d; ++c) {
          dot += dgj[c] * pk[c];
          dpk[c] += a * dgj[c];
        }
        dalpha[s] = dot;
      }
    }

    if (full) {
      const auto dns_flat = segment_softmax_backward(lc.alpha, dalpha, fi.edge_seg);
      std::vector<S> dns(n, S(0));
      for (std::size_t s = 0; s < dns_flat.size(); ++s)
        dns[static_cast<std::size_t>(fi.member_node[s])] += dns_flat[s];
      for (std::size_t k = 0; k < n; ++k) {
        const S dk = dns[k];
        if (dk == S(0)) continue;
        auto uk = lc.u.row(k);
        auto duk = du.row(k);
        for (std::size_t c = 0; c < d; ++c) {
          lg.a1[c] += dk * uk[c];
          duk[c] += dk * lp.a1[c];
        }
      }
      for (std::size_t i = 0; i < dp.size(); ++i)
        dp.data[i] += du.data[i] * leaky_relu_grad(lc.p.data[i], S(kLeakySlope));
    }

    if (li == 0) {
      Tensor2<S> dps(n, d);
      for (std::size_t i = 0; i < n; ++i) {
        const S s = lc.scales[i];
        auto src = dp.row(i);
        auto dst = dps.row(i);
        for (std::size_t c = 0; c < d; ++c) dst[c] = s * src[c];
      }
      one_hot_linear_backward(dps, hg.node_word_ids, lg.w1);
    } else {
      Tensor2<S> dhd(n, lp.w1.cols);
      matmul_nt_backward(dp, lc.hd, lp.w1, &dhd, &lg.w1);
      dh = Tensor2<S>(n, lp.w1.cols);
      for (std::size_t i = 0; i < dh.size(); ++i)
        dh.data[i] = dhd.data[i] * lc.mask.data[i];
    }
  }
}

// ---------------------------------------------------------------------------
// batch loss

struct DocGraph {
  std::int64_t doc_id = 0;
  int label = -1;
  TextHypergraph hg;
  FlatIncidence flat;
};

inline DocGraph make_doc_graph(const Document& doc, const TopicModel* topics,
                               const BuildOptions& opts = {}) {
  DocGraph g;
  g.doc_id = doc.id;
  g.label = doc.label_id;
  g.hg = build_hypergraph(doc, topics, opts);
  g.flat = flatten(g.hg);
  return g;
}

// Mean cross-entropy over the batch plus l2_lambda * sum of squared weights
// (classifier bias exempt). Gradients accumulate into `grads`.
template <typename S>
S batch_loss(HyperGATModel<S>& model,
             std::span<const DocGraph* const> batch, Mode mode,
             double l2_lambda, Rng* rng, ModelGrads<S>& grads) {
  if (batch.empty()) throw UsageError("batch_loss on an empty batch");
  const S inv = S(1) / S(batch.size());
  S total = S(0);
  for (const DocGraph* dg : batch) {
    if (dg->label < 0 || dg->label >= model.classes)
      throw DataError("document " + std::to_string(dg->doc_id) +
                      " label outside model classes");
    try {
      auto cache = forward(model, dg->hg, dg->flat, mode, rng);
      auto [loss, dlogits] = softmax_cross_entropy(
          std::span<const S>(cache.logits), dg->label);
      for (S& v : dlogits) v *= inv;
      backward(model, dg->hg, dg->flat, cache, std::span<const S>(dlogits),
               grads);
      total += loss * inv;
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (document " +
                         std::to_string(dg->doc_id) + ")");
    }
  }
  if (l2_lambda != 0.0) {
    total += static_cast<S>(l2_lambda * l2_penalty(model));
    const S two_l2 = S(2) * static_cast<S>(l2_lambda);
    for_each_param(model, grads,
                   [two_l2](const std::string&, std::vector<S>& p,
                            std::vector<S>& g, bool regularized) {
                     if (!regularized) return;
                     for (std::size_t i = 0; i < p.size(); ++i)
                       g[i] += two_l2 * p[i];
                   });
  }
  ensure_finite(std::span<const S>(&total, 1), "batch loss");
  return total;
}

// ---------------------------------------------------------------------------
// standalone attention stages (dense input, no dropout) and extraction

// Edge representations from node features: u_k = LeakyReLU(w1 h_k),
// alpha = softmax over each edge's members of a1 . u_k,
// f_j = ReLU(sum_k alpha_jk w1 h_k).
template <typename S>
std::pair<Tensor2<S>, std::vector<S>> node_level_attention(
    const LayerParams<S>& lp, const TextHypergraph& hg, const Tensor2<S>& h_prev) {
  const FlatIncidence fi = flatten(hg);
  const std::size_t d = lp.w1.rows;
  const Tensor2<S> p = matmul_nt(h_prev, lp.w1);
  std::vector<S> scores(fi.member_node.size());
  for (std::size_t s = 0; s < scores.size(); ++s) {
    const auto k = static_cast<std::size_t>(fi.member_node[s]);
    S acc = S(0);
    auto pk = p.row(k);
    for (std::size_t c = 0; c < d; ++c)
      acc += lp.a1[c] * leaky_relu(pk[c], S(kLeakySlope));
    scores[s] = acc;
  }
  const std::vector<S> alpha = segment_softmax(scores, fi.edge_seg);
  Tensor2<S> f(static_cast<std::size_t>(hg.n_edges()), d);
  for (std::size_t j = 0; j < f.rows; ++j) {
    auto fj = f.row(j);
    for (std::size_t s = fi.edge_seg.offsets[j]; s < fi.edge_seg.offsets[j + 1];
         ++s) {
      auto pk = p.row(static_cast<std::size_t>(fi.member_node[s]));
      for (std::size_t c = 0; c < d; ++c) fj[c] += alpha[s] * pk[c];
    }
    for (std::size_t c = 0; c < d; ++c) fj[c] = relu(fj[c]);
  }
  return {std::move(f), std::move(alpha)};
}

// Next node features from edge representations: scores
// a2 . LeakyReLU([w2 f_j || w1 h_i]) softmaxed over each node's edges,
// h_i = ReLU(sum_j beta_ij w2 f_j).
template <typename S>
std::pair<Tensor2<S>, std::vector<S>> edge_level_attention(
    const LayerParams<S>& lp, const TextHypergraph& hg, const Tensor2<S>& h_prev,
    const Tensor2<S>& f) {
  const FlatIncidence fi = flatten(hg);
  const std::size_t d = lp.w2.rows;
  const Tensor2<S> p = matmul_nt(h_prev, lp.w1);
  const Tensor2<S> q = matmul_nt(f, lp.w2);
  std::vector<S> scores(fi.incident_edge.size());
  for (std::size_t i = 0; i < p.rows; ++i) {
    S node_half = S(0);
    auto pi = p.row(i);
    for (std::size_t c = 0; c < d; ++c)
      node_half += lp.a2[d + c] * leaky_relu(pi[c], S(kLeakySlope));
    for (std::size_t s = fi.node_seg.offsets[i]; s < fi.node_seg.offsets[i + 1];
         ++s) {
      auto qj = q.row(static_cast<std::size_t>(fi.incident_edge[s]));
      S edge_half = S(0);
      for (std::size_t c = 0; c < d; ++c)
        edge_half += lp.a2[c] * leaky_relu(qj[c], S(kLeakySlope));
      scores[s] = edge_half + node_half;
    }
  }
  const std::vector<S> beta = segment_softmax(scores, fi.node_seg);
  Tensor2<S> h(p.rows, d);
  for (std::size_t i = 0; i < h.rows; ++i) {
    auto hi = h.row(i);
    for (std::size_t s = fi.node_seg.offsets[i]; s < fi.node_seg.offsets[i + 1];
         ++s) {
      auto qj = q.row(static_cast<std::size_t>(fi.incident_edge[s]));
      for (std::size_t c = 0; c < d; ++c) hi[c] += beta[s] * qj[c];
    }
    for (std::size_t c = 0; c < d; ++c) hi[c] = relu(hi[c]);
  }
  return {std::move(h), std::move(beta)};
}

struct AttentionMember {
  int node = 0;       // local node position
  double alpha = 0.0;
};

struct AttentionEdgeView {
  int edge = 0;
  EdgeKind kind = EdgeKind::sequential;
  double beta = 0.0;
  std::vector<AttentionMember> members;
};

// Attention weights of one layer organized per node: for every incident edge
// its beta plus the alpha of each member.
struct AttentionRecord {
  int layer = 0;
  std::vector<std::vector<AttentionEdgeView>> per_node;
};

template <typename S>
AttentionRecord extract_attention(const HyperGATModel<S>& model,
                                  const TextHypergraph& hg,
                                  const FlatIncidence& fi, int layer = -1) {
  if (layer < 0) layer = model.n_layers() - 1;
  if (layer >= model.n_layers())
    throw UsageError("attention layer index out of range");
  const auto cache = forward(model, hg, fi, Mode::eval, nullptr);
  const LayerCache<S>& lc = cache.layers[static_cast<std::size_t>(layer)];

  AttentionRecord rec;
  rec.layer = layer;
  rec.per_node.resize(static_cast<std::size_t>(hg.n_nodes()));
  for (std::size_t i = 0; i < rec.per_node.size(); ++i) {
    for (std::size_t s = fi.node_seg.offsets[i]; s < fi.node_seg.offsets[i + 1];
         ++s) {
      const int j = fi.incident_edge[s];
      AttentionEdgeView view;
      view.edge = j;
      view.kind = hg.edges[static_cast<std::size_t>(j)].kind;
      view.beta = static_cast<double>(lc.beta[s]);
      const auto uj = static_cast<std::size_t>(j);
      for (std::size_t t = fi.edge_seg.offsets[uj];
           t < fi.edge_seg.offsets[uj + 1]; ++t)
        view.members.push_back(
            {fi.member_node[t], static_cast<double>(lc.alpha[t])});
      rec.per_node[i].push_back(std::move(view));
    }
  }
  return rec;
}

}  // namespace hypergat
