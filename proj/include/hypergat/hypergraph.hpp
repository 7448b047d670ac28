#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hypergat/error.hpp"
#include "hypergat/lda.hpp"
#include "hypergat/ops.hpp"
#include "hypergat/text.hpp"

namespace hypergat {

enum class EdgeKind : std::uint8_t { sequential = 0, semantic = 1, fallback = 2 };

inline const char* edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::sequential: return "sequential";
    case EdgeKind::semantic: return "semantic";
    case EdgeKind::fallback: return "fallback";
  }
  return "?";
}

struct Hyperedge {
  EdgeKind kind;
  std::vector<int> members;  // local node positions, ascending
};

// A document's hypergraph. Nodes are the distinct in-vocabulary words in
// first-occurrence order; node_word_ids[i] doubles as the one-hot feature
// column of node i.
struct TextHypergraph {
  std::vector<int> node_word_ids;
  std::vector<Hyperedge> edges;
  std::vector<std::vector<int>> edge_lists_by_node;  // transpose of edges

  int n_nodes() const { return static_cast<int>(node_word_ids.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
};

struct IncidenceMatrix {
  int n = 0;
  int m = 0;
  std::vector<std::vector<int>> rows;  // rows[i]: edges containing node i
  std::vector<std::vector<int>> cols;  // cols[j]: nodes of edge j

  bool at(int i, int j) const {
    const auto& c = cols[static_cast<std::size_t>(j)];
    return std::binary_search(c.begin(), c.end(), i);
  }
};

// Flattened two-way incidence in the layout the model consumes:
// edge-major segments drive node->edge aggregation, node-major segments the
// edge->node step. flat_pair_of_slot maps a node-major slot back to its
// edge-major slot so attention weights can be shared between views.
struct FlatIncidence {
  Segments edge_seg;                // m segments
  std::vector<int> member_node;     // node position per edge-major slot
  Segments node_seg;                // n segments
  std::vector<int> incident_edge;   // edge position per node-major slot
};

struct BuildOptions {
  bool use_sequential = true;
  bool use_semantic = true;
  bool rank_within_doc = false;
  int top_k = 0;  // 0 -> the topic model's stored top_k
};

namespace detail {

inline void push_edge(TextHypergraph& hg, EdgeKind kind, std::vector<int> members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  hg.edges.push_back({kind, std::move(members)});
}

}  // namespace detail

// Document-level hypergraph per the construction rules:
//  - one sequential edge per sentence with >= 2 distinct words;
//  - one semantic edge per topic over the document words that land in the
//    topic's top-K list (global list by default; with rank_within_doc the
//    top-K is taken over the document's own words), kept when >= 2 members;
//  - if nothing above covers every node, a fallback edge joins all nodes so
//    edge-to-node aggregation is defined everywhere.
inline TextHypergraph build_hypergraph(const Document& doc,
                                       const TopicModel* topics,
                                       const BuildOptions& opts = {}) {
  TextHypergraph hg;
  std::unordered_map<int, int> pos_of;
  for (const auto& sent : doc.sentences) {
    for (int w : sent) {
      if (pos_of.emplace(w, hg.n_nodes()).second) hg.node_word_ids.push_back(w);
    }
  }
  if (hg.node_word_ids.empty())
    throw DataError("document " + std::to_string(doc.id) +
                    " has no in-vocabulary tokens");

  if (opts.use_sequential) {
    for (const auto& sent : doc.sentences) {
      std::vector<int> members;
      members.reserve(sent.size());
      for (int w : sent) members.push_back(pos_of.at(w));
      std::sort(members.begin(), members.end());
      members.erase(std::unique(members.begin(), members.end()), members.end());
      if (members.size() >= 2)
        hg.edges.push_back({EdgeKind::sequential, std::move(members)});
    }
  }

  if (opts.use_semantic && topics != nullptr) {
    const int k = opts.top_k > 0 ? opts.top_k : topics->top_k;
    if (static_cast<std::size_t>(k) > topics->vocab_size)
      throw UsageError("semantic top-k exceeds vocabulary size (k=" +
                       std::to_string(k) + ")");
    for (int t = 0; t < topics->topics; ++t) {
      const auto& order = topics->ranking[static_cast<std::size_t>(t)];
      std::vector<int> members;
      if (opts.rank_within_doc) {
        // Walk the global ranking and keep the first K words present in the
        // document: the top-K of the distribution restricted to doc words.
        for (int w : order) {
          auto it = pos_of.find(w);
          if (it == pos_of.end()) continue;
          members.push_back(it->second);
          if (static_cast<int>(members.size()) == k) break;
        }
      } else {
        for (int r = 0; r < k; ++r) {
          auto it = pos_of.find(order[static_cast<std::size_t>(r)]);
          if (it != pos_of.end()) members.push_back(it->second);
        }
      }
      if (members.size() >= 2)
        detail::push_edge(hg, EdgeKind::semantic, std::move(members));
    }
  }

  std::vector<char> covered(static_cast<std::size_t>(hg.n_nodes()), 0);
  for (const auto& e : hg.edges)
    for (int i : e.members) covered[static_cast<std::size_t>(i)] = 1;
  if (std::find(covered.begin(), covered.end(), 0) != covered.end()) {
    std::vector<int> all(static_cast<std::size_t>(hg.n_nodes()));
    std::iota(all.begin(), all.end(), 0);
    hg.edges.push_back({EdgeKind::fallback, std::move(all)});
  }

  hg.edge_lists_by_node.assign(static_cast<std::size_t>(hg.n_nodes()), {});
  for (int j = 0; j < hg.n_edges(); ++j)
    for (int i : hg.edges[static_cast<std::size_t>(j)].members)
      hg.edge_lists_by_node[static_cast<std::size_t>(i)].push_back(j);
  return hg;
}

inline IncidenceMatrix incidence(const TextHypergraph& hg) {
  IncidenceMatrix a;
  a.n = hg.n_nodes();
  a.m = hg.n_edges();
  a.rows = hg.edge_lists_by_node;
  a.cols.reserve(hg.edges.size());
  for (const auto& e : hg.edges) a.cols.push_back(e.members);
  return a;
}

inline FlatIncidence flatten(const TextHypergraph& hg) {
  FlatIncidence f;
  f.edge_seg.offsets.assign(1, 0);
  for (const auto& e : hg.edges) {
    f.member_node.insert(f.member_node.end(), e.members.begin(), e.members.end());
    f.edge_seg.offsets.push_back(f.member_node.size());
  }
  f.node_seg.offsets.assign(1, 0);
  for (const auto& lst : hg.edge_lists_by_node) {
    if (lst.empty())
      throw DataError("hypergraph node without incident edges");
    f.incident_edge.insert(f.incident_edge.end(), lst.begin(), lst.end());
    f.node_seg.offsets.push_back(f.incident_edge.size());
  }
  return f;
}

using u128 = unsigned __int128;

inline std::string u128_to_string(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

// Element counts behind the memory-footprint comparison: a per-batch
// incidence block of n x m per document versus one (N+M)^2 adjacency over the
// whole corpus (word and document vertices together).
inline std::pair<u128, u128> memory_elements(std::uint64_t n, std::uint64_t m,
                                             std::uint64_t bsz, std::uint64_t N,
                                             std::uint64_t M) {
  if (n == 0 || m == 0 || bsz == 0 || N == 0 || M == 0)
    throw UsageError("memory_elements arguments must be positive");
  const u128 batch = static_cast<u128>(n) * static_cast<u128>(m) *
                     static_cast<u128>(bsz);
  const u128 side = static_cast<u128>(N) + static_cast<u128>(M);
  return {batch, side * side};
}

}  // namespace hypergat
