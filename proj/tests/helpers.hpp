#pragma once

// Shared scaffolding for the test suite: synthetic hypergraphs, temp dirs,
// tiny corpora, and a subprocess driver for the CLI binary.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "hypergat/hypergraph.hpp"
#include "hypergat/rng.hpp"
#include "hypergat/text.hpp"

namespace testutil {

using namespace hypergat;

inline void finalize_graph(TextHypergraph& hg) {
  hg.edge_lists_by_node.assign(static_cast<std::size_t>(hg.n_nodes()), {});
  for (int j = 0; j < hg.n_edges(); ++j)
    for (int i : hg.edges[static_cast<std::size_t>(j)].members)
      hg.edge_lists_by_node[static_cast<std::size_t>(i)].push_back(j);
}

// Synthetic hypergraph with explicit membership. Members are node positions;
// every node must appear in at least one edge.
inline TextHypergraph toy_graph(std::vector<int> words,
                                std::vector<std::vector<int>> edges) {
  TextHypergraph hg;
  hg.node_word_ids = std::move(words);
  for (auto& e : edges) detail::push_edge(hg, EdgeKind::sequential, std::move(e));
  finalize_graph(hg);
  return hg;
}

// Random connected hypergraph for property tests: 2..8 nodes with distinct
// word ids below `vocab`, 1..3 random edges plus a coverage edge if needed.
inline TextHypergraph random_graph(Rng& rng, int vocab) {
  const int n = 2 + static_cast<int>(rng.next_u64() % 7);
  std::vector<int> ids(static_cast<std::size_t>(vocab));
  for (int i = 0; i < vocab; ++i) ids[static_cast<std::size_t>(i)] = i;
  rng.shuffle(ids);
  ids.resize(static_cast<std::size_t>(n));

  TextHypergraph hg;
  hg.node_word_ids = ids;
  const int n_edges = 1 + static_cast<int>(rng.next_u64() % 3);
  for (int j = 0; j < n_edges; ++j) {
    const int sz = 2 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n - 1));
    std::vector<int> members;
    for (int s = 0; s < sz; ++s)
      members.push_back(static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n)));
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    if (members.size() < 2) {
      members = {0, (n > 1) ? 1 : 0};
      std::sort(members.begin(), members.end());
      members.erase(std::unique(members.begin(), members.end()), members.end());
      if (members.size() < 2) members = {0};
    }
    detail::push_edge(hg, j % 2 == 0 ? EdgeKind::sequential : EdgeKind::semantic,
                      std::move(members));
  }
  std::vector<char> covered(static_cast<std::size_t>(n), 0);
  for (const auto& e : hg.edges)
    for (int i : e.members) covered[static_cast<std::size_t>(i)] = 1;
  bool all = true;
  for (char c : covered) all = all && c;
  if (!all) {
    std::vector<int> everyone(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) everyone[static_cast<std::size_t>(i)] = i;
    detail::push_edge(hg, EdgeKind::fallback, std::move(everyone));
  }
  finalize_graph(hg);
  return hg;
}

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / "hypergat_test_XXXXXX").string();
    char* made = mkdtemp(tmpl.data());
    if (made == nullptr) throw std::runtime_error("mkdtemp failed");
    path = made;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// synthetic corpora

// Two well-separated classes: "sport" docs draw from ball-game words, "money"
// docs from finance words, with a couple of shared fillers. Sentences are
// separated so sequential edges exist.
inline std::string two_class_tsv(int docs_per_class, std::uint64_t seed,
                                 int words_per_sentence = 4) {
  static const std::vector<std::string> sport = {
      "goal", "team", "coach", "league", "striker", "match",
      "defender", "referee", "stadium", "tournament"};
  static const std::vector<std::string> money = {
      "profit", "shares", "market", "dividend", "broker", "invest",
      "equity", "earnings", "deficit", "currency"};
  static const std::vector<std::string> filler = {"the", "report", "today"};
  Rng rng(seed);
  std::ostringstream out;
  auto emit = [&](const std::string& label, const std::vector<std::string>& pool) {
    out << label << '\t';
    for (int s = 0; s < 2; ++s) {
      for (int w = 0; w < words_per_sentence; ++w) {
        const auto& src = (rng.next_u64() % 5 == 0) ? filler : pool;
        out << src[rng.next_u64() % src.size()] << ' ';
      }
      out << ". ";
    }
    out << '\n';
  };
  for (int i = 0; i < docs_per_class; ++i) {
    emit("sport", sport);
    emit("money", money);
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// CLI subprocess driver

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

inline std::string cli_binary() {
  const char* bin = std::getenv("HYPERGAT_BIN");
  if (bin == nullptr)
    throw std::runtime_error("HYPERGAT_BIN not set (run through ctest)");
  return bin;
}

inline CliResult run_cli(const std::string& args,
                         const std::string& stdin_text = "") {
  TempDir io;
  const std::string out_path = io.file("out");
  const std::string err_path = io.file("err");
  std::string cmd = cli_binary() + " " + args;
  if (!stdin_text.empty()) {
    const std::string in_path = io.file("in");
    write_file(in_path, stdin_text);
    cmd += " < " + in_path;
  } else {
    cmd += " < /dev/null";
  }
  cmd += " > " + out_path + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

}  // namespace testutil
