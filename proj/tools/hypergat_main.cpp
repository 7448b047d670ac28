// Command-line front end for the hypergraph text classifier. Every
// subcommand reads/writes artifacts in a working directory so that pipelines
// (prepare -> lda -> train -> eval/predict/attention/ablate) compose.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hypergat/commands.hpp"
#include "hypergat/error.hpp"

namespace {

std::string config_reference() {
  // key, default, meaning -- kept in one place so --help stays honest
  static const char* rows[][3] = {
      {"lr", "0.001", "Adam learning rate (0 freezes the model)"},
      {"batch_size", "8", "documents per gradient step"},
      {"l2_lambda", "1e-06", "L2 penalty on weights (biases exempt)"},
      {"dropout_p", "0.3", "input dropout per layer while training"},
      {"max_epochs", "100", "hard cap on training epochs"},
      {"patience", "5", "stop after this many epochs without val improvement"},
      {"seed", "42", "initialization / shuffling / dropout seed"},
      {"variant", "full", "attention variant: full | no_attention"},
      {"layer_dims", "300,100", "hidden widths, comma separated"},
      {"data.min_freq", "auto", "vocab cutoff; auto = 5 on corpora >5000 docs, else 1"},
      {"split.ratio", "0.9", "train share of the train/validation carve"},
      {"lda.topics", "auto", "topic count; auto = number of classes"},
      {"lda.topk", "10", "words kept per topic when building edges"},
      {"lda.alpha", "auto", "document-topic prior; auto = 50/topics"},
      {"lda.beta", "0.01", "topic-word prior"},
      {"lda.iters", "200", "Gibbs sweeps"},
      {"lda.seed", "7", "topic-model sampler seed"},
      {"edges.sequential", "true", "one hyperedge per sentence"},
      {"edges.semantic", "true", "one hyperedge per topic (needs topics.json)"},
      {"semantic.rank_within_doc", "false",
       "rank topic words inside each document instead of globally"},
      {"eval.runs", "1", "repeated train+test runs for eval/ablate"},
      {"eval.seed", "42", "base seed for repeated runs (seed+0, seed+1, ...)"},
  };
  std::string s =
      "Config keys (file via --config as `key = value` lines, '#' comments;\n"
      "override any of them with --set key=value):\n";
  for (const auto& r : rows) {
    s += "  ";
    s += r[0];
    int pad = 26 - static_cast<int>(std::string(r[0]).size());
    for (int i = 0; i < pad; ++i) s += ' ';
    s += "[";
    s += r[1];
    s += "] ";
    s += r[2];
    s += '\n';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hypergat;

  CLI::App app{"hypergat: inductive text classification on document hypergraphs"};
  app.require_subcommand(1);
  app.footer(config_reference());

  cmd::PrepareOptions prep;
  auto* prepare = app.add_subcommand(
      "prepare", "Tokenize train.tsv/test.tsv into vocab.txt and docs.bin");
  prepare->add_option("--data", prep.data_dir, "directory with train.tsv and test.tsv")
      ->required();
  prepare->add_option("--out", prep.out_dir, "working directory for artifacts")
      ->required();
  prepare->add_option("--config", prep.config_path, "config file");
  prepare->add_option("--set", prep.sets, "override config key=value");
  prepare->add_option("--dump-hypergraph", prep.dump_doc,
                      "print one stored document's hypergraph as JSON");

  cmd::LdaOptions lda;
  auto* lda_cmd = app.add_subcommand(
      "lda", "Fit topics on the training split, write topics.json");
  lda_cmd->add_option("--workdir", lda.workdir, "working directory")->required();
  lda_cmd->add_option("--config", lda.config_path, "config file");
  lda_cmd->add_option("--set", lda.sets, "override config key=value");
  lda_cmd->add_option("--topics", lda.topics, "topic count (overrides config)");
  lda_cmd->add_option("--topk", lda.topk, "top words per topic");
  lda_cmd->add_option("--iters", lda.iters, "Gibbs sweeps");
  lda_cmd->add_option("--seed", lda.seed, "sampler seed");

  cmd::TrainOptions tr;
  auto* train_cmd = app.add_subcommand(
      "train", "Train a model; writes model.hgat and history.json");
  train_cmd->add_option("--workdir", tr.workdir, "working directory")->required();
  train_cmd->add_option("--config", tr.config_path, "config file");
  train_cmd->add_option("--set", tr.sets, "override config key=value");
  train_cmd->add_option("--out", tr.out_name, "checkpoint file name");

  cmd::EvalOptions ev;
  auto* eval_cmd = app.add_subcommand(
      "eval",
      "Test accuracy; --runs N>1 retrains with seeds base..base+N-1; writes eval.json");
  eval_cmd->add_option("--workdir", ev.workdir, "working directory")->required();
  eval_cmd->add_option("--model", ev.model_name, "checkpoint file name");
  eval_cmd->add_option("--set", ev.sets, "override config key=value");
  eval_cmd->add_option("--runs", ev.runs, "number of repeated runs");
  eval_cmd->add_option("--seed", ev.seed, "base seed for repeated runs");

  cmd::PredictOptions pr;
  auto* predict_cmd = app.add_subcommand(
      "predict", "Classify raw text lines from stdin or --input FILE");
  predict_cmd->add_option("--workdir", pr.workdir, "working directory")->required();
  predict_cmd->add_option("--model", pr.model_name, "checkpoint file name");
  predict_cmd->add_option("--input", pr.input, "text file, one document per line ('-' = stdin)");

  cmd::AttentionOptions at;
  auto* att_cmd = app.add_subcommand(
      "attention", "Dump attention weights for one document to attention.json");
  att_cmd->add_option("--workdir", at.workdir, "working directory")->required();
  att_cmd->add_option("--model", at.model_name, "checkpoint file name");
  att_cmd->add_option("--doc", at.doc_id, "stored document id");
  att_cmd->add_option("--text", at.text, "raw text instead of a stored document");
  att_cmd->add_option("--word", at.word, "only emit the node for this word");
  att_cmd->add_option("--layer", at.layer, "layer index (default: last)");
  att_cmd->add_option("--out", at.out_name, "output file name");

  cmd::AblateOptions ab;
  auto* ablate_cmd = app.add_subcommand(
      "ablate",
      "Train full, no_attention, no_sequential, no_semantic, one_layer; writes ablate.json");
  ablate_cmd->add_option("--workdir", ab.workdir, "working directory")->required();
  ablate_cmd->add_option("--config", ab.config_path, "config file");
  ablate_cmd->add_option("--set", ab.sets, "override config key=value");
  ablate_cmd->add_option("--runs", ab.runs, "runs per variant");
  ablate_cmd->add_option("--seed", ab.seed, "base seed");
  ablate_cmd->add_option("--out", ab.out_name, "output file name");

  cmd::MemestOptions me;
  auto* mem_cmd = app.add_subcommand(
      "memest", "Compare per-batch incidence storage to a corpus-level graph");
  mem_cmd->add_option("--workdir", me.workdir, "measure n/m over a prepared corpus");
  mem_cmd->add_option("--nodes", me.nodes, "average nodes per document graph");
  mem_cmd->add_option("--edges", me.edges, "average hyperedges per document graph");
  mem_cmd->add_option("--batch", me.batch, "batch size (default 8)");
  mem_cmd->add_option("--words", me.words, "vocabulary size of the corpus graph");
  mem_cmd->add_option("--docs", me.docs, "document count of the corpus graph");

  cmd::ExportOptions ex;
  auto* export_cmd = app.add_subcommand(
      "export-embeddings", "Write pooled document vectors as TSV");
  export_cmd->add_option("--workdir", ex.workdir, "working directory")->required();
  export_cmd->add_option("--model", ex.model_name, "checkpoint file name");
  export_cmd->add_option("--out", ex.out_name, "output file name");
  export_cmd->add_option("--split", ex.split, "all | train | test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (prepare->parsed()) cmd::cmd_prepare(prep);
    if (lda_cmd->parsed()) cmd::cmd_lda(lda);
    if (train_cmd->parsed()) cmd::cmd_train(tr);
    if (eval_cmd->parsed()) cmd::cmd_eval(ev);
    if (predict_cmd->parsed()) cmd::cmd_predict(pr, std::cin, std::cout);
    if (att_cmd->parsed()) cmd::cmd_attention(at);
    if (ablate_cmd->parsed()) cmd::cmd_ablate(ab);
    if (mem_cmd->parsed()) cmd::cmd_memest(me);
    if (export_cmd->parsed()) cmd::cmd_export_embeddings(ex);
  } catch (const hypergat::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const hypergat::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const hypergat::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
