#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hypergat/checkpoint.hpp"
#include "hypergat/config.hpp"
#include "hypergat/error.hpp"
#include "hypergat/hypergraph.hpp"
#include "hypergat/io_audit.hpp"
#include "hypergat/lda.hpp"
#include "hypergat/metrics.hpp"
#include "hypergat/model.hpp"
#include "hypergat/store.hpp"
#include "hypergat/text.hpp"
#include "hypergat/trainer.hpp"

namespace hypergat::cmd {

// CLI runs single precision; the test suite instantiates the same templates
// with double where tolerances demand it.
using CliScalar = float;

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void require_file(const std::string& path, const std::string& remedy) {
  if (!std::filesystem::exists(path))
    throw DataError("missing " + path + "; " + remedy);
}

inline void apply_overrides(Config& cfg, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw UsageError("--set expects key=value, got '" + kv + "'");
    cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
}

inline Config resolve_config(const std::string& config_path,
                             const std::vector<std::string>& sets) {
  Config cfg;
  if (!config_path.empty()) cfg = Config::load(config_path);
  apply_overrides(cfg, sets);
  return cfg;
}

inline Config config_from_echo(const nlohmann::json& echo) {
  Config cfg;
  for (const auto& [k, v] : echo.items()) cfg.set(k, v.get<std::string>());
  return cfg;
}

inline BuildOptions build_options(const Config& cfg) {
  BuildOptions o;
  o.use_sequential = cfg.get_bool("edges.sequential");
  o.use_semantic = cfg.get_bool("edges.semantic");
  o.rank_within_doc = cfg.get_bool("semantic.rank_within_doc");
  return o;
}

inline void write_json_artifact(const std::string& path,
                                const nlohmann::json& j) {
  auto out = io::open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// shared pipeline pieces

inline std::vector<Document> docs_of_split(const std::vector<Document>& docs,
                                           Split split) {
  std::vector<Document> out;
  for (const auto& d : docs)
    if (d.split == split) out.push_back(d);
  return out;
}

// Builds hypergraphs, silently skipping degenerate documents; the caller
// reports the count.
inline std::pair<std::vector<DocGraph>, std::size_t> build_graphs(
    const std::vector<Document>& docs, const TopicModel* topics,
    const BuildOptions& opts) {
  std::vector<DocGraph> graphs;
  std::size_t dropped = 0;
  graphs.reserve(docs.size());
  for (const auto& d : docs) {
    if (d.degenerate()) {
      ++dropped;
      continue;
    }
    graphs.push_back(make_doc_graph(d, topics, opts));
  }
  return {std::move(graphs), dropped};
}

// Test-set accuracy under the inference contract: degenerate documents are
// scored as class 0.
template <typename S>
std::pair<double, std::size_t> test_accuracy(const HyperGATModel<S>& model,
                                             const std::vector<Document>& docs,
                                             const TopicModel* topics,
                                             const BuildOptions& opts) {
  if (docs.empty()) throw DataError("no test documents to evaluate");
  std::vector<int> preds, labels;
  std::size_t degenerate = 0;
  preds.reserve(docs.size());
  labels.reserve(docs.size());
  for (const auto& d : docs) {
    if (d.degenerate()) {
      ++degenerate;
      preds.push_back(0);
    } else {
      preds.push_back(predict_one(model, make_doc_graph(d, topics, opts)));
    }
    labels.push_back(d.label_id);
  }
  return {accuracy(preds, labels), degenerate};
}

struct RunResult {
  TrainOutput<CliScalar> trained;
  double test_acc = 0.0;
  std::size_t degenerate_test = 0;
};

// One full train+test cycle: carve train/val with the run seed, build
// hypergraphs, train, evaluate the best checkpoint on the stored test split.
inline RunResult run_training(const Config& cfg, const Vocabulary& vocab,
                              const DocStore& store, const TopicModel* topics,
                              std::ostream& log) {
  const TrainConfig tc = TrainConfig::from(cfg);
  const BuildOptions opts = build_options(cfg);
  if (opts.use_semantic && topics == nullptr)
    throw DataError(
        "semantic edges requested but no topic model given; run `hypergat "
        "lda` or set edges.semantic=false");

  const auto all_train = docs_of_split(store.docs, Split::train);
  if (all_train.empty()) throw DataError("document store has no training docs");
  const auto [train_docs, val_docs] =
      split_train_val(all_train, cfg.get_double("split.ratio"), tc.seed);

  auto [train_graphs, train_dropped] = build_graphs(train_docs, topics, opts);
  auto [val_graphs, val_dropped] = build_graphs(val_docs, topics, opts);
  if (train_dropped + val_dropped > 0)
    log << "note: skipped " << (train_dropped + val_dropped)
        << " degenerate training/validation documents\n";

  RunResult r;
  r.trained = train<CliScalar>(tc, train_graphs, val_graphs,
                               static_cast<int>(vocab.size()),
                               static_cast<int>(store.labels.size()));
  const auto test_docs = docs_of_split(store.docs, Split::test);
  auto [acc, degenerate] =
      test_accuracy(r.trained.model, test_docs, topics, opts);
  r.test_acc = acc;
  r.degenerate_test = degenerate;
  return r;
}

struct Workspace {
  Vocabulary vocab;
  DocStore store;
  std::optional<TopicModel> topics;
};

inline Workspace load_workspace(const std::string& workdir, bool need_topics) {
  Workspace ws;
  const std::string vocab_path = join_path(workdir, "vocab.txt");
  const std::string docs_path = join_path(workdir, "docs.bin");
  require_file(vocab_path, "run `hypergat prepare` first");
  require_file(docs_path, "run `hypergat prepare` first");
  ws.vocab = read_vocab(vocab_path);
  ws.store = read_docs(docs_path);
  const std::string topics_path = join_path(workdir, "topics.json");
  if (std::filesystem::exists(topics_path)) {
    ws.topics = read_topics(topics_path, ws.vocab);
  } else if (need_topics) {
    throw DataError("missing " + topics_path +
                    "; run `hypergat lda` or set edges.semantic=false");
  }
  return ws;
}

// ---------------------------------------------------------------------------
// prepare

struct PrepareOptions {
  std::string data_dir;
  std::string out_dir;
  std::string config_path;
  std::vector<std::string> sets;
  long long dump_doc = -1;  // >= 0: print that document's hypergraph as JSON
};

// Debug view of one stored document's hypergraph, with word ids resolved to
// strings. Semantic edges appear only if the workdir already has topics.json.
inline nlohmann::json hypergraph_json(const Document& doc,
                                      const Vocabulary& vocab,
                                      const TopicModel* topics,
                                      const BuildOptions& opts) {
  const TextHypergraph hg = build_hypergraph(doc, topics, opts);
  nlohmann::json j;
  nlohmann::json nodes = nlohmann::json::array();
  for (int w : hg.node_word_ids)
    nodes.push_back(vocab.words[static_cast<std::size_t>(w)]);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : hg.edges) {
    nlohmann::json ej;
    ej["kind"] = edge_kind_name(e.kind);
    nlohmann::json members = nlohmann::json::array();
    for (int i : e.members) {
      const int w = hg.node_word_ids[static_cast<std::size_t>(i)];
      members.push_back(vocab.words[static_cast<std::size_t>(w)]);
    }
    ej["members"] = std::move(members);
    edges.push_back(std::move(ej));
  }
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  return j;
}

inline void cmd_prepare(const PrepareOptions& opt) {
  Config cfg = resolve_config(opt.config_path, opt.sets);

  const std::string train_path = join_path(opt.data_dir, "train.tsv");
  const std::string test_path = join_path(opt.data_dir, "test.tsv");
  require_file(train_path, "expected <data>/train.tsv with label<TAB>text rows");
  require_file(test_path, "expected <data>/test.tsv with label<TAB>text rows");

  auto tokenize_all = [](const std::string& path, std::int64_t first_id) {
    auto in = io::open_input(path);
    const auto raw = parse_dataset(in, path);
    std::vector<TokenizedDoc> docs;
    docs.reserve(raw.size());
    for (const auto& r : raw) {
      TokenizedDoc d;
      d.id = first_id + static_cast<std::int64_t>(docs.size());
      d.label = r.label;
      d.sentences = tokenize(r.text);
      docs.push_back(std::move(d));
    }
    return docs;
  };
  const auto train_tok = tokenize_all(train_path, 0);
  const auto test_tok =
      tokenize_all(test_path, static_cast<std::int64_t>(train_tok.size()));
  if (train_tok.empty()) throw DataError(train_path + " has no documents");
  if (test_tok.empty()) throw DataError(test_path + " has no documents");

  const LabelSet labels = build_label_set(train_tok);
  const int min_freq = resolve_min_freq(cfg, train_tok.size());
  const Vocabulary vocab = build_vocabulary(train_tok, min_freq);

  DocStore store;
  store.labels = labels.names;
  store.config_echo = config_echo_json(cfg);
  std::size_t degenerate_train = 0, degenerate_test = 0;
  for (const auto& d : train_tok) {
    Document doc = index_document(d, vocab, labels.id_of(d.label), Split::train);
    if (doc.degenerate()) ++degenerate_train;
    store.docs.push_back(std::move(doc));
  }
  for (const auto& d : test_tok) {
    const int label_id = labels.id_of(d.label);
    if (label_id < 0)
      throw DataError("test document " + std::to_string(d.id) +
                      " has label '" + d.label +
                      "' never seen in the training split");
    Document doc = index_document(d, vocab, label_id, Split::test);
    if (doc.degenerate()) ++degenerate_test;
    store.docs.push_back(std::move(doc));
  }

  std::filesystem::create_directories(opt.out_dir);
  write_vocab(join_path(opt.out_dir, "vocab.txt"), vocab);
  write_docs(join_path(opt.out_dir, "docs.bin"), store);

  if (opt.dump_doc >= 0) {
    const Document* found = nullptr;
    for (const auto& d : store.docs)
      if (d.id == opt.dump_doc) found = &d;
    if (found == nullptr)
      throw DataError("no document with id " + std::to_string(opt.dump_doc));
    std::optional<TopicModel> topics;
    const std::string topics_path = join_path(opt.out_dir, "topics.json");
    if (std::filesystem::exists(topics_path))
      topics = read_topics(topics_path, vocab);
    nlohmann::json j = hypergraph_json(*found, vocab,
                                       topics ? &*topics : nullptr,
                                       build_options(cfg));
    j["spec_version"] = kSpecVersion;
    j["config"] = store.config_echo;
    std::cout << j.dump(2) << '\n';
    return;
  }

  std::cout << "vocabulary: " << vocab.size() << " words (min_freq "
            << min_freq << ")\n"
            << "classes: " << labels.size() << "\n"
            << "train: " << train_tok.size() << " docs (" << degenerate_train
            << " degenerate)\n"
            << "test: " << test_tok.size() << " docs (" << degenerate_test
            << " degenerate)\n";
}

// ---------------------------------------------------------------------------
// lda

struct LdaOptions {
  std::string workdir;
  std::string config_path;
  std::vector<std::string> sets;
  long long topics = -1;  // flag overrides; negative = keep config value
  long long topk = -1;
  long long iters = -1;
  long long seed = -1;
};

inline void cmd_lda(const LdaOptions& opt) {
  Config cfg = resolve_config(opt.config_path, opt.sets);
  if (opt.topics >= 0) cfg.set("lda.topics", std::to_string(opt.topics));
  if (opt.topk >= 0) cfg.set("lda.topk", std::to_string(opt.topk));
  if (opt.iters >= 0) cfg.set("lda.iters", std::to_string(opt.iters));
  if (opt.seed >= 0) cfg.set("lda.seed", std::to_string(opt.seed));

  Workspace ws = load_workspace(opt.workdir, /*need_topics=*/false);
  const auto train_docs = docs_of_split(ws.store.docs, Split::train);
  const LdaConfig lda_cfg =
      resolve_lda(cfg, static_cast<int>(ws.store.labels.size()));
  const TopicModel model = fit_lda(train_docs, ws.vocab.size(), lda_cfg);
  write_topics(join_path(opt.workdir, "topics.json"), model, ws.vocab,
               config_echo_json(cfg));

  for (int t = 0; t < model.topics; ++t) {
    std::cout << "topic " << t << ":";
    for (int w : model.top_words[static_cast<std::size_t>(t)])
      std::cout << ' ' << ws.vocab.words[static_cast<std::size_t>(w)];
    std::cout << '\n';
  }
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string workdir;
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_name = "model.hgat";
};

inline nlohmann::json history_json(const TrainHistory& hist,
                                   const nlohmann::json& echo) {
  nlohmann::json j;
  j["spec_version"] = kSpecVersion;
  j["config"] = echo;
  nlohmann::json epochs = nlohmann::json::array();
  // wall times stay out of the artifact so identical runs are byte-identical
  for (const auto& e : hist.epochs) {
    nlohmann::json ej;
    ej["epoch"] = e.epoch;
    ej["train_loss"] = e.train_loss;
    ej["train_acc"] = e.train_acc;
    ej["val_acc"] = e.val_acc;
    epochs.push_back(std::move(ej));
  }
  j["epochs"] = std::move(epochs);
  j["best_epoch"] = hist.best_epoch;
  j["best_val_acc"] = hist.best_val_acc;
  j["stop_reason"] = hist.stop_reason;
  return j;
}

inline void cmd_train(const TrainOptions& opt) {
  Config cfg = resolve_config(opt.config_path, opt.sets);
  const bool need_topics = cfg.get_bool("edges.semantic");
  Workspace ws = load_workspace(opt.workdir, need_topics);
  const TopicModel* topics =
      need_topics && ws.topics ? &*ws.topics : nullptr;

  RunResult r = run_training(cfg, ws.vocab, ws.store, topics, std::cerr);
  for (const auto& e : r.trained.history.epochs) {
    std::printf("epoch %3d  loss %.4f  train_acc %.4f  val_acc %.4f  (%.1fs)\n",
                e.epoch, e.train_loss, e.train_acc, e.val_acc, e.seconds);
  }
  std::printf("best epoch %d (val_acc %.4f), stop: %s\n",
              r.trained.history.best_epoch, r.trained.history.best_val_acc,
              r.trained.history.stop_reason.c_str());
  std::printf("test_acc %.4f\n", r.test_acc);
  if (r.degenerate_test > 0)
    std::cerr << "warning: " << r.degenerate_test
              << " degenerate test documents scored as class 0\n";

  const nlohmann::json echo = config_echo_json(cfg);
  save_checkpoint(join_path(opt.workdir, opt.out_name), r.trained.model,
                  ws.store.labels, vocab_hash(ws.vocab), cfg.get_u64("seed"),
                  echo);
  write_json_artifact(join_path(opt.workdir, "history.json"),
                      history_json(r.trained.history, echo));
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string workdir;
  std::string model_name = "model.hgat";
  std::vector<std::string> sets;
  long long runs = -1;   // negative: take eval.runs from the model's config
  long long seed = -1;   // negative: take eval.seed
};

inline void cmd_eval(const EvalOptions& opt) {
  const std::string model_path = join_path(opt.workdir, opt.model_name);
  require_file(model_path, "run `hypergat train` first");
  const auto ck = load_checkpoint<CliScalar>(model_path);
  Config cfg = config_from_echo(ck.config_echo);
  apply_overrides(cfg, opt.sets);
  if (opt.runs >= 0) cfg.set("eval.runs", std::to_string(opt.runs));
  if (opt.seed >= 0) cfg.set("eval.seed", std::to_string(opt.seed));
  const long long runs = cfg.get_int("eval.runs");
  if (runs < 1) throw UsageError("eval.runs must be >= 1");
  const std::uint64_t base_seed = cfg.get_u64("eval.seed");

  const bool need_topics = cfg.get_bool("edges.semantic");
  Workspace ws = load_workspace(opt.workdir, need_topics);
  if (vocab_hash(ws.vocab) != ck.vocab_hash)
    throw DataError(model_path + " was trained on a different vocabulary");
  const TopicModel* topics = need_topics && ws.topics ? &*ws.topics : nullptr;
  const auto test_docs = docs_of_split(ws.store.docs, Split::test);
  const BuildOptions opts = build_options(cfg);

  std::vector<double> accs;
  std::vector<std::uint64_t> seeds;
  std::size_t degenerate = 0;
  if (runs == 1) {
    // score the stored checkpoint as-is
    auto [acc, degen] = test_accuracy(ck.model, test_docs, topics, opts);
    accs.push_back(acc);
    seeds.push_back(ck.seed);
    degenerate = degen;
    std::printf("run seed %llu  test_acc %.4f\n",
                static_cast<unsigned long long>(ck.seed), acc);
  } else {
    // full retrain per seed, per the repeated-runs protocol
    for (long long r = 0; r < runs; ++r) {
      const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r);
      Config run_cfg = cfg;
      run_cfg.set("seed", std::to_string(seed));
      RunResult res = run_training(run_cfg, ws.vocab, ws.store, topics,
                                   std::cerr);
      accs.push_back(res.test_acc);
      seeds.push_back(seed);
      degenerate = res.degenerate_test;
      std::printf("run seed %llu  test_acc %.4f\n",
                  static_cast<unsigned long long>(seed), res.test_acc);
    }
  }
  const RunSummary summary = summarize_runs(accs, seeds);
  if (summary.has_std)
    std::printf("mean %.4f  std %.4f  over %zu runs\n", summary.mean,
                summary.stddev, summary.runs());
  else
    std::printf("mean %.4f  over %zu runs\n", summary.mean, summary.runs());
  if (degenerate > 0)
    std::cerr << "warning: " << degenerate
              << " degenerate test documents scored as class 0\n";

  nlohmann::json j;
  j["spec_version"] = kSpecVersion;
  j["config"] = config_echo_json(cfg);
  j["seeds"] = summary.seeds;
  j["accuracies"] = summary.accuracies;
  j["mean"] = summary.mean;
  if (summary.has_std) j["std"] = summary.stddev;
  j["degenerate_test_docs"] = degenerate;
  write_json_artifact(join_path(opt.workdir, "eval.json"), j);
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
  std::string workdir;
  std::string model_name = "model.hgat";
  std::string input = "-";  // "-" = stdin, otherwise a file of raw texts
};

// Inductive classification of raw text. Reads only the frozen artifacts
// (model, vocab, topics) -- never the document store or any split file.
inline void cmd_predict(const PredictOptions& opt, std::istream& stdin_stream,
                        std::ostream& out) {
  const std::string model_path = join_path(opt.workdir, opt.model_name);
  require_file(model_path, "run `hypergat train` first");
  const auto ck = load_checkpoint<CliScalar>(model_path);
  const Config cfg = config_from_echo(ck.config_echo);
  const Vocabulary vocab = read_vocab(join_path(opt.workdir, "vocab.txt"));
  if (vocab_hash(vocab) != ck.vocab_hash)
    throw DataError(model_path + " was trained on a different vocabulary");

  const bool need_topics = cfg.get_bool("edges.semantic");
  std::optional<TopicModel> topics;
  if (need_topics)
    topics = read_topics(join_path(opt.workdir, "topics.json"), vocab);
  const BuildOptions opts = build_options(cfg);

  std::optional<std::ifstream> file;
  if (opt.input != "-") file = io::open_input(opt.input);
  std::istream& in = file ? *file : stdin_stream;

  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    TokenizedDoc doc;
    doc.id = lineno;
    doc.sentences = tokenize(line);
    const Prediction p = predict_text(ck.model, doc, vocab,
                                      topics ? &*topics : nullptr, opts);
    if (p.degenerate)
      std::cerr << "warning: line " << lineno
                << " has no in-vocabulary tokens; defaulting to class 0\n";
    out << ck.labels[static_cast<std::size_t>(p.label_id)] << '\n';
  }
}

// ---------------------------------------------------------------------------
// attention

struct AttentionOptions {
  std::string workdir;
  std::string model_name = "model.hgat";
  long long doc_id = -1;       // one of doc_id / text must be given
  std::string text;
  std::string word;            // empty: emit the whole record
  long long layer = -1;        // negative: last layer
  std::string out_name = "attention.json";
};

inline void cmd_attention(const AttentionOptions& opt) {
  if (opt.doc_id < 0 && opt.text.empty())
    throw UsageError("attention needs --doc <id> or --text <raw text>");
  if (opt.doc_id >= 0 && !opt.text.empty())
    throw UsageError("--doc and --text are mutually exclusive");

  const std::string model_path = join_path(opt.workdir, opt.model_name);
  require_file(model_path, "run `hypergat train` first");
  const auto ck = load_checkpoint<CliScalar>(model_path);
  const Config cfg = config_from_echo(ck.config_echo);
  const bool need_topics = cfg.get_bool("edges.semantic");
  Workspace ws = load_workspace(opt.workdir, need_topics);
  if (vocab_hash(ws.vocab) != ck.vocab_hash)
    throw DataError(model_path + " was trained on a different vocabulary");
  const TopicModel* topics = need_topics && ws.topics ? &*ws.topics : nullptr;
  const BuildOptions opts = build_options(cfg);

  Document doc;
  if (opt.doc_id >= 0) {
    bool found = false;
    for (const auto& d : ws.store.docs)
      if (d.id == opt.doc_id) {
        doc = d;
        found = true;
        break;
      }
    if (!found)
      throw DataError("no stored document with id " +
                      std::to_string(opt.doc_id));
  } else {
    TokenizedDoc raw;
    raw.id = -1;
    raw.sentences = tokenize(opt.text);
    doc = index_document(raw, ws.vocab, -1, Split::test);
  }
  if (doc.degenerate())
    throw DataError("document has no in-vocabulary tokens");

  const DocGraph g = make_doc_graph(doc, topics, opts);
  const AttentionRecord rec =
      extract_attention(ck.model, g.hg, g.flat,
                        static_cast<int>(opt.layer));

  int want_node = -1;
  if (!opt.word.empty()) {
    const int wid = ws.vocab.lookup(opt.word);
    if (wid >= 0)
      for (int i = 0; i < g.hg.n_nodes(); ++i)
        if (g.hg.node_word_ids[static_cast<std::size_t>(i)] == wid)
          want_node = i;
    if (want_node < 0)
      throw DataError("word '" + opt.word + "' does not occur in the document");
  }

  auto word_of = [&](int node) {
    return ws.vocab.words[static_cast<std::size_t>(
        g.hg.node_word_ids[static_cast<std::size_t>(node)])];
  };
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < rec.per_node.size(); ++i) {
    if (want_node >= 0 && static_cast<std::size_t>(want_node) != i) continue;
    nlohmann::json entry;
    entry["word"] = word_of(static_cast<int>(i));
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& ev : rec.per_node[i]) {
      nlohmann::json ej;
      ej["edge"] = ev.edge;
      ej["kind"] = edge_kind_name(ev.kind);
      ej["beta"] = ev.beta;
      nlohmann::json members = nlohmann::json::array();
      for (const auto& mv : ev.members) {
        nlohmann::json mj;
        mj["word"] = word_of(mv.node);
        mj["alpha"] = mv.alpha;
        members.push_back(std::move(mj));
      }
      ej["members"] = std::move(members);
      edges.push_back(std::move(ej));
    }
    entry["edges"] = std::move(edges);
    nodes.push_back(std::move(entry));
  }

  nlohmann::json j;
  j["spec_version"] = kSpecVersion;
  j["config"] = config_echo_json(cfg);
  j["layer"] = rec.layer;
  if (opt.doc_id >= 0) j["doc_id"] = opt.doc_id;
  if (!opt.word.empty()) j["word"] = opt.word;
  j["nodes"] = std::move(nodes);
  write_json_artifact(join_path(opt.workdir, opt.out_name), j);
  std::cout << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// ablate

struct AblateOptions {
  std::string workdir;
  std::string config_path;
  std::vector<std::string> sets;
  long long runs = -1;
  long long seed = -1;
  std::string out_name = "ablate.json";
};

inline void cmd_ablate(const AblateOptions& opt) {
  Config base = resolve_config(opt.config_path, opt.sets);
  if (opt.runs >= 0) base.set("eval.runs", std::to_string(opt.runs));
  if (opt.seed >= 0) base.set("eval.seed", std::to_string(opt.seed));
  const long long runs = base.get_int("eval.runs");
  if (runs < 1) throw UsageError("eval.runs must be >= 1");
  const std::uint64_t base_seed = base.get_u64("eval.seed");

  // the one-layer variant keeps the first hidden width
  const std::vector<int> base_dims = base.get_int_list("layer_dims");
  const std::string one_layer_dims = std::to_string(base_dims.front());

  struct VariantSpec {
    std::string name;
    std::string key;    // empty = baseline
    std::string value;
  };
  const std::vector<VariantSpec> variants = {
      {"full", "", ""},
      {"no_attention", "variant", "no_attention"},
      {"no_sequential", "edges.sequential", "false"},
      {"no_semantic", "edges.semantic", "false"},
      {"one_layer", "layer_dims", one_layer_dims},
  };

  const bool need_topics = base.get_bool("edges.semantic");
  Workspace ws = load_workspace(opt.workdir, need_topics);

  nlohmann::json out_variants = nlohmann::json::array();
  std::vector<double> full_accs;
  for (const auto& vs : variants) {
    Config cfg = base;
    if (!vs.key.empty()) cfg.set(vs.key, vs.value);
    const bool semantic = cfg.get_bool("edges.semantic");
    const TopicModel* topics = semantic && ws.topics ? &*ws.topics : nullptr;

    std::vector<double> accs;
    std::vector<std::uint64_t> seeds;
    for (long long r = 0; r < runs; ++r) {
      const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r);
      Config run_cfg = cfg;
      run_cfg.set("seed", std::to_string(seed));
      RunResult res =
          run_training(run_cfg, ws.vocab, ws.store, topics, std::cerr);
      accs.push_back(res.test_acc);
      seeds.push_back(seed);
    }
    const RunSummary summary = summarize_runs(accs, seeds);
    if (vs.name == "full") full_accs = summary.accuracies;

    nlohmann::json vj;
    vj["name"] = vs.name;
    vj["accuracies"] = summary.accuracies;
    vj["seeds"] = summary.seeds;
    vj["mean"] = summary.mean;
    if (summary.has_std) vj["std"] = summary.stddev;
    if (vs.name != "full" && summary.runs() >= 2 && full_accs.size() >= 2) {
      const WelchResult w = welch_t_test(full_accs, summary.accuracies);
      vj["p_vs_full"] = w.p;
    }
    out_variants.push_back(std::move(vj));

    if (summary.has_std)
      std::printf("%-14s mean %.4f  std %.4f\n", vs.name.c_str(), summary.mean,
                  summary.stddev);
    else
      std::printf("%-14s mean %.4f\n", vs.name.c_str(), summary.mean);
  }

  nlohmann::json j;
  j["spec_version"] = kSpecVersion;
  j["config"] = config_echo_json(base);
  j["runs"] = runs;
  j["variants"] = std::move(out_variants);
  write_json_artifact(join_path(opt.workdir, opt.out_name), j);
}

// ---------------------------------------------------------------------------
// memest

struct MemestOptions {
  std::string workdir;   // measured mode when set
  long long nodes = -1;  // direct mode: all five must be given
  long long edges = -1;
  long long batch = 8;
  long long words = -1;
  long long docs = -1;
};

inline void cmd_memest(const MemestOptions& opt) {
  std::uint64_t n = 0, m = 0, N = 0, M = 0;
  const auto bsz = static_cast<std::uint64_t>(opt.batch);
  if (!opt.workdir.empty()) {
    Workspace ws = load_workspace(opt.workdir, /*need_topics=*/false);
    const TopicModel* topics = ws.topics ? &*ws.topics : nullptr;
    BuildOptions opts;
    double n_sum = 0.0, m_sum = 0.0;
    std::size_t counted = 0;
    for (const auto& d : ws.store.docs) {
      if (d.degenerate()) continue;
      const TextHypergraph hg = build_hypergraph(d, topics, opts);
      n_sum += hg.n_nodes();
      m_sum += hg.n_edges();
      ++counted;
    }
    if (counted == 0) throw DataError("no usable documents to measure");
    n = static_cast<std::uint64_t>(
        std::ceil(n_sum / static_cast<double>(counted)));
    m = static_cast<std::uint64_t>(
        std::ceil(m_sum / static_cast<double>(counted)));
    N = ws.vocab.size();
    M = ws.store.docs.size();
  } else {
    if (opt.nodes < 1 || opt.edges < 1 || opt.words < 1 || opt.docs < 1)
      throw UsageError(
          "memest needs --workdir, or all of --nodes --edges --words --docs");
    n = static_cast<std::uint64_t>(opt.nodes);
    m = static_cast<std::uint64_t>(opt.edges);
    N = static_cast<std::uint64_t>(opt.words);
    M = static_cast<std::uint64_t>(opt.docs);
  }
  const auto [batch_elems, corpus_elems] = memory_elements(n, m, bsz, N, M);
  const double ratio = static_cast<double>(corpus_elems) /
                       static_cast<double>(batch_elems);

  nlohmann::json j;
  j["spec_version"] = kSpecVersion;
  j["n"] = n;
  j["m"] = m;
  j["batch_size"] = bsz;
  j["words"] = N;
  j["docs"] = M;
  j["batch_elements"] = u128_to_string(batch_elems);
  j["corpus_graph_elements"] = u128_to_string(corpus_elems);
  j["ratio"] = ratio;
  std::cout << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// export-embeddings

struct ExportOptions {
  std::string workdir;
  std::string model_name = "model.hgat";
  std::string out_name = "embeddings.tsv";
  std::string split = "all";  // all | train | test
};

inline void cmd_export_embeddings(const ExportOptions& opt) {
  const std::string model_path = join_path(opt.workdir, opt.model_name);
  require_file(model_path, "run `hypergat train` first");
  const auto ck = load_checkpoint<CliScalar>(model_path);
  const Config cfg = config_from_echo(ck.config_echo);
  const bool need_topics = cfg.get_bool("edges.semantic");
  Workspace ws = load_workspace(opt.workdir, need_topics);
  if (vocab_hash(ws.vocab) != ck.vocab_hash)
    throw DataError(model_path + " was trained on a different vocabulary");
  const TopicModel* topics = need_topics && ws.topics ? &*ws.topics : nullptr;
  const BuildOptions opts = build_options(cfg);

  if (opt.split != "all" && opt.split != "train" && opt.split != "test")
    throw UsageError("--split must be all, train, or test");

  auto out = io::open_output(join_path(opt.workdir, opt.out_name));
  std::size_t skipped = 0;
  char buf[64];
  for (const auto& d : ws.store.docs) {
    if (opt.split == "train" && d.split != Split::train) continue;
    if (opt.split == "test" && d.split != Split::test) continue;
    if (d.degenerate()) {
      ++skipped;
      continue;
    }
    const DocGraph g = make_doc_graph(d, topics, opts);
    const auto cache = forward(ck.model, g.hg, g.flat, Mode::eval, nullptr);
    out << d.id << '\t' << ws.store.labels[static_cast<std::size_t>(d.label_id)];
    for (CliScalar v : cache.z) {
      // %.9g round-trips float32 exactly
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
      out << '\t' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing embeddings");
  if (skipped > 0)
    std::cerr << "warning: skipped " << skipped << " degenerate documents\n";
}

}  // namespace hypergat::cmd
