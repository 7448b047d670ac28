#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "hypergat/grad_check.hpp"
#include "hypergat/model.hpp"

using namespace hypergat;
using testutil::random_graph;
using testutil::toy_graph;

// ---------------------------------------------------------------------------
// Independent dense reference: naive loops over the incidence matrix, with
// the edge-level score computed as a literal concatenation
// a2 . LeakyReLU([w2 f_j || w1 h_i]). No flattening, no shared projections.

namespace {

struct RefLayer {
  std::vector<std::vector<double>> alpha;  // m x n, zero off-membership
  std::vector<std::vector<double>> beta;   // n x m
};

struct RefOut {
  std::vector<RefLayer> layers;
  std::vector<double> z;
  std::vector<double> logits;
};

RefOut ref_forward(const HyperGATModel<double>& model,
                   const TextHypergraph& hg) {
  const auto inc = incidence(hg);
  const std::size_t n = static_cast<std::size_t>(inc.n);
  const std::size_t m = static_cast<std::size_t>(inc.m);
  const double slope = kLeakySlope;
  auto lrelu = [&](double x) { return x > 0.0 ? x : slope * x; };

  // dense one-hot input
  std::vector<std::vector<double>> h(
      n, std::vector<double>(static_cast<std::size_t>(model.input_dim()), 0.0));
  for (std::size_t i = 0; i < n; ++i)
    h[i][static_cast<std::size_t>(hg.node_word_ids[i])] = 1.0;

  RefOut out;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& lp = model.layers[l];
    const std::size_t d = lp.w1.rows;
    const std::size_t d_prev = lp.w1.cols;

    std::vector<std::vector<double>> p(n, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t k = 0; k < d_prev; ++k)
          p[i][c] += lp.w1.at(c, k) * h[i][k];

    RefLayer rl;
    rl.alpha.assign(m, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> f(m, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
      const auto& members = inc.cols[j];
      double mx = -1e300;
      std::vector<double> score(members.size());
      for (std::size_t s = 0; s < members.size(); ++s) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c)
          acc += lp.a1[c] * lrelu(p[static_cast<std::size_t>(members[s])][c]);
        score[s] = acc;
        mx = std::max(mx, acc);
      }
      double denom = 0.0;
      for (double& v : score) {
        v = std::exp(v - mx);
        denom += v;
      }
      for (std::size_t s = 0; s < members.size(); ++s) {
        const double a = (model.variant == Variant::no_attention)
                             ? 1.0 / static_cast<double>(members.size())
                             : score[s] / denom;
        rl.alpha[j][static_cast<std::size_t>(members[s])] = a;
        for (std::size_t c = 0; c < d; ++c)
          f[j][c] += a * p[static_cast<std::size_t>(members[s])][c];
      }
      for (std::size_t c = 0; c < d; ++c) f[j][c] = std::max(0.0, f[j][c]);
    }

    std::vector<std::vector<double>> q(m, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t k = 0; k < d; ++k) q[j][c] += lp.w2.at(c, k) * f[j][k];

    rl.beta.assign(n, std::vector<double>(m, 0.0));
    std::vector<std::vector<double>> hn(n, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& edges = inc.rows[i];
      std::vector<double> score(edges.size());
      double mx = -1e300;
      for (std::size_t s = 0; s < edges.size(); ++s) {
        // literal concatenation [q_j || p_i] against a2
        std::vector<double> cat(2 * d);
        for (std::size_t c = 0; c < d; ++c) {
          cat[c] = q[static_cast<std::size_t>(edges[s])][c];
          cat[d + c] = p[i][c];
        }
        double acc = 0.0;
        for (std::size_t c = 0; c < 2 * d; ++c) acc += lp.a2[c] * lrelu(cat[c]);
        score[s] = acc;
        mx = std::max(mx, acc);
      }
      double denom = 0.0;
      for (double& v : score) {
        v = std::exp(v - mx);
        denom += v;
      }
      for (std::size_t s = 0; s < edges.size(); ++s) {
        const double b = (model.variant == Variant::no_attention)
                             ? 1.0 / static_cast<double>(edges.size())
                             : score[s] / denom;
        rl.beta[i][static_cast<std::size_t>(edges[s])] = b;
        for (std::size_t c = 0; c < d; ++c)
          hn[i][c] += b * q[static_cast<std::size_t>(edges[s])][c];
      }
      for (std::size_t c = 0; c < d; ++c) hn[i][c] = std::max(0.0, hn[i][c]);
    }

    out.layers.push_back(std::move(rl));
    h = std::move(hn);
  }

  const std::size_t d_last = h[0].size();
  out.z.assign(d_last, 0.0);
  for (const auto& row : h)
    for (std::size_t c = 0; c < d_last; ++c) out.z[c] += row[c];
  for (double& v : out.z) v /= static_cast<double>(n);
  out.logits.assign(static_cast<std::size_t>(model.classes), 0.0);
  for (std::size_t c = 0; c < out.logits.size(); ++c) {
    double acc = model.bc[c];
    for (std::size_t k = 0; k < d_last; ++k)
      acc += model.wc.at(c, k) * out.z[k];
    out.logits[c] = acc;
  }
  return out;
}

// parameter <-> flat vector plumbing for gradient checks
std::vector<double> pack_params(HyperGATModel<double>& m) {
  ModelGrads<double> g(m);
  std::vector<double> x;
  for_each_param(m, g,
                 [&x](const std::string&, std::vector<double>& p,
                      std::vector<double>&, bool) {
                   x.insert(x.end(), p.begin(), p.end());
                 });
  return x;
}

void unpack_params(const std::vector<double>& x, HyperGATModel<double>& m) {
  ModelGrads<double> g(m);
  std::size_t at = 0;
  for_each_param(m, g,
                 [&x, &at](const std::string&, std::vector<double>& p,
                           std::vector<double>&, bool) {
                   std::copy(x.begin() + static_cast<std::ptrdiff_t>(at),
                             x.begin() + static_cast<std::ptrdiff_t>(at + p.size()),
                             p.begin());
                   at += p.size();
                 });
  REQUIRE(at == x.size());
}

std::vector<double> pack_grads(HyperGATModel<double>& m, ModelGrads<double>& g) {
  std::vector<double> out;
  for_each_param(m, g,
                 [&out](const std::string&, std::vector<double>&,
                        std::vector<double>& gr, bool) {
                   out.insert(out.end(), gr.begin(), gr.end());
                 });
  return out;
}

DocGraph graph_to_doc(const TextHypergraph& hg, int label, std::int64_t id) {
  DocGraph g;
  g.doc_id = id;
  g.label = label;
  g.hg = hg;
  g.flat = flatten(hg);
  return g;
}

double run_grad_check(Variant variant, std::uint64_t seed, double l2) {
  auto model = init_model<double>({8, 5, 4}, 3, variant, 0.0, seed);
  Rng rng(seed * 31 + 7);
  const auto hg1 = random_graph(rng, 8);
  const auto hg2 = random_graph(rng, 8);
  const auto d1 = graph_to_doc(hg1, 0, 1);
  const auto d2 = graph_to_doc(hg2, 2, 2);
  const std::vector<const DocGraph*> batch = {&d1, &d2};

  auto objective = [&](const std::vector<double>& x) {
    unpack_params(x, model);
    ModelGrads<double> g(model);
    return batch_loss<double>(model, batch, Mode::eval, l2, nullptr, g);
  };

  auto x = pack_params(model);
  ModelGrads<double> grads(model);
  batch_loss<double>(model, batch, Mode::eval, l2, nullptr, grads);
  const auto analytic = pack_grads(model, grads);
  return grad_check(objective, x, analytic);
}

}  // namespace

TEST_CASE("forward matches the dense concatenation-style reference") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
    Rng rng(seed);
    const auto hg = random_graph(rng, 10);
    const auto fi = flatten(hg);
    const auto model = init_model<double>({10, 6, 4}, 3, Variant::full, 0.3, seed);
    // dropout_p is nonzero but eval mode must ignore it
    const auto cache = forward(model, hg, fi, Mode::eval, nullptr);
    const auto ref = ref_forward(model, hg);

    REQUIRE(cache.logits.size() == 3);
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(cache.logits[c] == Catch::Approx(ref.logits[c]).margin(1e-10));
    for (std::size_t c = 0; c < cache.z.size(); ++c)
      CHECK(cache.z[c] == Catch::Approx(ref.z[c]).margin(1e-10));

    for (std::size_t l = 0; l < 2; ++l) {
      const auto& lc = cache.layers[l];
      for (std::size_t j = 0; j < fi.edge_seg.count(); ++j)
        for (std::size_t s = fi.edge_seg.offsets[j];
             s < fi.edge_seg.offsets[j + 1]; ++s) {
          const auto i = static_cast<std::size_t>(fi.member_node[s]);
          CHECK(lc.alpha[s] ==
                Catch::Approx(ref.layers[l].alpha[j][i]).margin(1e-10));
        }
      for (std::size_t i = 0; i < fi.node_seg.count(); ++i)
        for (std::size_t s = fi.node_seg.offsets[i];
             s < fi.node_seg.offsets[i + 1]; ++s) {
          const auto j = static_cast<std::size_t>(fi.incident_edge[s]);
          CHECK(lc.beta[s] ==
                Catch::Approx(ref.layers[l].beta[i][j]).margin(1e-10));
        }
    }
  }
}

TEST_CASE("uniform variant matches the reference with flat weights") {
  Rng rng(9);
  const auto hg = random_graph(rng, 10);
  const auto fi = flatten(hg);
  const auto model =
      init_model<double>({10, 5, 4}, 2, Variant::no_attention, 0.0, 99);
  const auto cache = forward(model, hg, fi, Mode::eval, nullptr);
  const auto ref = ref_forward(model, hg);
  for (std::size_t c = 0; c < cache.logits.size(); ++c)
    CHECK(cache.logits[c] == Catch::Approx(ref.logits[c]).margin(1e-10));

  // the weights themselves are exactly uniform over each segment
  const auto& lc = cache.layers[0];
  for (std::size_t j = 0; j < fi.edge_seg.count(); ++j) {
    const double sz = static_cast<double>(fi.edge_seg.offsets[j + 1] -
                                          fi.edge_seg.offsets[j]);
    for (std::size_t s = fi.edge_seg.offsets[j]; s < fi.edge_seg.offsets[j + 1];
         ++s)
      CHECK(lc.alpha[s] == Catch::Approx(1.0 / sz).margin(1e-12));
  }
  for (std::size_t i = 0; i < fi.node_seg.count(); ++i) {
    const double sz = static_cast<double>(fi.node_seg.offsets[i + 1] -
                                          fi.node_seg.offsets[i]);
    for (std::size_t s = fi.node_seg.offsets[i]; s < fi.node_seg.offsets[i + 1];
         ++s)
      CHECK(lc.beta[s] == Catch::Approx(1.0 / sz).margin(1e-12));
  }
}

TEST_CASE("standalone attention stages agree with the fused forward pass") {
  Rng rng(12);
  const auto hg = random_graph(rng, 6);
  const auto fi = flatten(hg);
  const auto model = init_model<double>({6, 4}, 2, Variant::full, 0.0, 5);
  const auto cache = forward(model, hg, fi, Mode::eval, nullptr);

  // dense one-hot input reproduces the fused layer-0 one-hot shortcut
  Tensor2<double> h0(static_cast<std::size_t>(hg.n_nodes()), 6);
  for (int i = 0; i < hg.n_nodes(); ++i)
    h0.at(static_cast<std::size_t>(i),
          static_cast<std::size_t>(hg.node_word_ids[static_cast<std::size_t>(i)])) = 1.0;

  const auto [f, alpha] = node_level_attention(model.layers[0], hg, h0);
  const auto [h, beta] = edge_level_attention(model.layers[0], hg, h0, f);
  const auto& lc = cache.layers[0];
  REQUIRE(f.size() == lc.f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    CHECK(f.data[i] == Catch::Approx(lc.f.data[i]).margin(1e-12));
  for (std::size_t i = 0; i < alpha.size(); ++i)
    CHECK(alpha[i] == Catch::Approx(lc.alpha[i]).margin(1e-12));
  for (std::size_t i = 0; i < h.size(); ++i)
    CHECK(h.data[i] == Catch::Approx(lc.h.data[i]).margin(1e-12));
  for (std::size_t i = 0; i < beta.size(); ++i)
    CHECK(beta[i] == Catch::Approx(lc.beta[i]).margin(1e-12));
}

TEST_CASE("analytic gradients match finite differences on both variants") {
  CHECK(run_grad_check(Variant::full, 101, 0.0) < 1e-5);
  CHECK(run_grad_check(Variant::full, 102, 0.01) < 1e-5);
  CHECK(run_grad_check(Variant::no_attention, 103, 0.0) < 1e-5);
  CHECK(run_grad_check(Variant::no_attention, 104, 0.001) < 1e-5);
}

TEST_CASE("attention weights form a simplex on every segment") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto hg = random_graph(rng, 12);
    const auto fi = flatten(hg);
    const auto model =
        init_model<float>({12, 5, 3}, 2, Variant::full, 0.0, 7 + static_cast<std::uint64_t>(trial));
    const auto cache = forward(model, hg, fi, Mode::eval, nullptr);
    for (const auto& lc : cache.layers) {
      for (std::size_t j = 0; j < fi.edge_seg.count(); ++j) {
        float sum = 0.0f;
        for (std::size_t s = fi.edge_seg.offsets[j];
             s < fi.edge_seg.offsets[j + 1]; ++s) {
          REQUIRE(lc.alpha[s] >= 0.0f);
          sum += lc.alpha[s];
        }
        REQUIRE(std::abs(sum - 1.0f) < 1e-5f);
      }
      for (std::size_t i = 0; i < fi.node_seg.count(); ++i) {
        float sum = 0.0f;
        for (std::size_t s = fi.node_seg.offsets[i];
             s < fi.node_seg.offsets[i + 1]; ++s) {
          REQUIRE(lc.beta[s] >= 0.0f);
          sum += lc.beta[s];
        }
        REQUIRE(std::abs(sum - 1.0f) < 1e-5f);
      }
    }
  }
}

namespace {

// Relabels nodes and edges by random permutations; word ids travel with
// their nodes.
TextHypergraph permute_graph(const TextHypergraph& hg, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(hg.n_nodes());
  const std::size_t m = static_cast<std::size_t>(hg.n_edges());
  std::vector<int> node_new(n), edge_new(m);
  std::iota(node_new.begin(), node_new.end(), 0);
  std::iota(edge_new.begin(), edge_new.end(), 0);
  rng.shuffle(node_new);
  rng.shuffle(edge_new);

  TextHypergraph out;
  out.node_word_ids.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    out.node_word_ids[static_cast<std::size_t>(node_new[i])] =
        hg.node_word_ids[i];
  out.edges.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    Hyperedge e;
    e.kind = hg.edges[j].kind;
    for (int i : hg.edges[j].members)
      e.members.push_back(node_new[static_cast<std::size_t>(i)]);
    std::sort(e.members.begin(), e.members.end());
    out.edges[static_cast<std::size_t>(edge_new[j])] = std::move(e);
  }
  testutil::finalize_graph(out);
  return out;
}

}  // namespace

TEST_CASE("logits are equivariant under node and edge relabeling") {
  Rng rng(321);
  const auto model = init_model<float>({15, 6, 4}, 3, Variant::full, 0.0, 55);
  for (int trial = 0; trial < 40; ++trial) {
    const auto hg = random_graph(rng, 15);
    const auto perm = permute_graph(hg, rng);
    const auto base = forward(model, hg, flatten(hg), Mode::eval, nullptr);
    const auto moved = forward(model, perm, flatten(perm), Mode::eval, nullptr);
    for (std::size_t c = 0; c < base.logits.size(); ++c)
      CHECK(base.logits[c] == Catch::Approx(moved.logits[c]).margin(1e-5));
  }
}

TEST_CASE("train-mode dropout is rng-deterministic and changes activations") {
  Rng g(77);
  const auto hg = random_graph(g, 10);
  const auto fi = flatten(hg);
  const auto model = init_model<double>({10, 6, 4}, 2, Variant::full, 0.5, 3);

  Rng r1(42), r2(42), r3(43);
  const auto a = forward(model, hg, fi, Mode::train, &r1);
  const auto b = forward(model, hg, fi, Mode::train, &r2);
  const auto c = forward(model, hg, fi, Mode::train, &r3);
  CHECK(a.logits == b.logits);
  CHECK(a.logits != c.logits);

  const auto ev = forward(model, hg, fi, Mode::eval, nullptr);
  CHECK(a.logits != ev.logits);
  CHECK_THROWS_AS(forward(model, hg, fi, Mode::train, nullptr),
                  std::logic_error);
}

TEST_CASE("initialization is seed-deterministic with Glorot bounds") {
  const auto a = init_model<double>({20, 8, 4}, 3, Variant::full, 0.1, 11);
  const auto b = init_model<double>({20, 8, 4}, 3, Variant::full, 0.1, 11);
  const auto c = init_model<double>({20, 8, 4}, 3, Variant::full, 0.1, 12);
  CHECK(a.layers[0].w1.data == b.layers[0].w1.data);
  CHECK(a.wc.data == b.wc.data);
  CHECK(a.layers[0].w1.data != c.layers[0].w1.data);

  auto check_bounds = [](const std::vector<double>& v, std::size_t fan_in,
                         std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    double mx = 0.0;
    for (double x : v) {
      REQUIRE(std::abs(x) <= limit);
      mx = std::max(mx, std::abs(x));
    }
    CHECK(mx > 0.2 * limit);  // actually spread out, not collapsed near zero
  };
  check_bounds(a.layers[0].w1.data, 20, 8);
  check_bounds(a.layers[0].w2.data, 8, 8);
  check_bounds(a.layers[0].a1, 8, 1);
  check_bounds(a.layers[0].a2, 16, 1);
  check_bounds(a.layers[1].w1.data, 8, 4);
  check_bounds(a.wc.data, 4, 3);
  for (double x : a.bc) CHECK(x == 0.0);

  CHECK_THROWS_AS(init_model<double>({5}, 2, Variant::full, 0.0, 1), UsageError);
  CHECK_THROWS_AS(init_model<double>({5, 3}, 1, Variant::full, 0.0, 1),
                  UsageError);
}

TEST_CASE("batch loss is the mean of singleton losses plus regularization") {
  auto model = init_model<double>({8, 4}, 2, Variant::full, 0.0, 21);
  Rng rng(22);
  const auto d1 = graph_to_doc(random_graph(rng, 8), 0, 1);
  const auto d2 = graph_to_doc(random_graph(rng, 8), 1, 2);

  ModelGrads<double> g(model);
  const std::vector<const DocGraph*> only1 = {&d1};
  const std::vector<const DocGraph*> only2 = {&d2};
  const std::vector<const DocGraph*> both = {&d1, &d2};
  const double l1 = batch_loss<double>(model, only1, Mode::eval, 0.0, nullptr, g);
  g.zero();
  const double l2 = batch_loss<double>(model, only2, Mode::eval, 0.0, nullptr, g);
  g.zero();
  const double lb = batch_loss<double>(model, both, Mode::eval, 0.0, nullptr, g);
  CHECK(lb == Catch::Approx((l1 + l2) / 2.0).margin(1e-12));

  const double lam = 0.05;
  g.zero();
  const double lreg = batch_loss<double>(model, both, Mode::eval, lam, nullptr, g);
  CHECK(lreg == Catch::Approx(lb + lam * l2_penalty(model)).margin(1e-12));
}

TEST_CASE("gradient buffers accumulate across calls") {
  auto model = init_model<double>({8, 4}, 2, Variant::full, 0.0, 31);
  Rng rng(32);
  const auto d1 = graph_to_doc(random_graph(rng, 8), 0, 1);
  const std::vector<const DocGraph*> batch = {&d1};
  ModelGrads<double> once(model), twice(model);
  batch_loss<double>(model, batch, Mode::eval, 0.0, nullptr, once);
  batch_loss<double>(model, batch, Mode::eval, 0.0, nullptr, twice);
  batch_loss<double>(model, batch, Mode::eval, 0.0, nullptr, twice);
  for (std::size_t i = 0; i < once.wc.size(); ++i)
    CHECK(twice.wc.data[i] == Catch::Approx(2.0 * once.wc.data[i]).margin(1e-12));
}

TEST_CASE("bad labels and vocabulary mismatches are data errors") {
  auto model = init_model<double>({8, 4}, 2, Variant::full, 0.0, 41);
  Rng rng(42);
  const auto good = graph_to_doc(random_graph(rng, 8), 0, 7);
  auto bad_label = good;
  bad_label.label = 2;
  ModelGrads<double> g(model);
  const std::vector<const DocGraph*> batch = {&bad_label};
  CHECK_THROWS_AS(batch_loss<double>(model, batch, Mode::eval, 0.0, nullptr, g),
                  DataError);

  auto oversized = toy_graph({3, 9}, {{0, 1}});  // word 9 >= input_dim 8
  CHECK_THROWS_AS(forward(model, oversized, flatten(oversized), Mode::eval,
                          nullptr),
                  DataError);
}

TEST_CASE("attention extraction mirrors the cached weights per node") {
  Rng rng(61);
  const auto hg = random_graph(rng, 9);
  const auto fi = flatten(hg);
  const auto model = init_model<double>({9, 5, 3}, 2, Variant::full, 0.0, 62);
  const auto rec = extract_attention(model, hg, fi);
  CHECK(rec.layer == 1);  // default: last layer
  REQUIRE(rec.per_node.size() == static_cast<std::size_t>(hg.n_nodes()));

  for (std::size_t i = 0; i < rec.per_node.size(); ++i) {
    double bsum = 0.0;
    REQUIRE(rec.per_node[i].size() ==
            hg.edge_lists_by_node[i].size());
    for (const auto& ev : rec.per_node[i]) {
      bsum += ev.beta;
      CHECK(ev.kind == hg.edges[static_cast<std::size_t>(ev.edge)].kind);
      double asum = 0.0;
      REQUIRE(ev.members.size() ==
              hg.edges[static_cast<std::size_t>(ev.edge)].members.size());
      for (const auto& mv : ev.members) asum += mv.alpha;
      CHECK(asum == Catch::Approx(1.0).margin(1e-9));
    }
    CHECK(bsum == Catch::Approx(1.0).margin(1e-9));
  }

  const auto rec0 = extract_attention(model, hg, fi, 0);
  CHECK(rec0.layer == 0);
  CHECK_THROWS_AS(extract_attention(model, hg, fi, 2), UsageError);
}
