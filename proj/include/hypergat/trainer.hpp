#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hypergat/adam.hpp"
#include "hypergat/config.hpp"
#include "hypergat/error.hpp"
#include "hypergat/model.hpp"

namespace hypergat {

struct TrainConfig {
  double lr = 0.001;
  int batch_size = 8;
  double l2_lambda = 1e-6;
  double dropout_p = 0.3;
  int max_epochs = 100;
  int patience = 5;
  std::uint64_t seed = 42;
  Variant variant = Variant::full;
  std::vector<int> hidden_dims = {300, 100};

  static TrainConfig from(const Config& cfg) {
    TrainConfig tc;
    tc.lr = cfg.get_double("lr");
    tc.batch_size = static_cast<int>(cfg.get_int("batch_size"));
    tc.l2_lambda = cfg.get_double("l2_lambda");
    tc.dropout_p = cfg.get_double("dropout_p");
    tc.max_epochs = static_cast<int>(cfg.get_int("max_epochs"));
    tc.patience = static_cast<int>(cfg.get_int("patience"));
    tc.seed = cfg.get_u64("seed");
    tc.variant = parse_variant(cfg.get("variant"));
    tc.hidden_dims = cfg.get_int_list("layer_dims");
    return tc;
  }

  // lr = 0 is admitted deliberately: a frozen model is the cleanest probe of
  // the early-stopping and checkpointing mechanics.
  void validate() const {
    if (lr < 0.0) throw UsageError("lr must be >= 0");
    if (batch_size < 1) throw UsageError("batch_size must be >= 1");
    if (l2_lambda < 0.0) throw UsageError("l2_lambda must be >= 0");
    if (dropout_p < 0.0 || dropout_p >= 1.0)
      throw UsageError("dropout_p must be in [0, 1)");
    if (max_epochs < 1) throw UsageError("max_epochs must be >= 1");
    if (patience < 1 || patience > max_epochs)
      throw UsageError("patience must be in [1, max_epochs]");
    if (hidden_dims.empty()) throw UsageError("layer_dims must not be empty");
    for (int d : hidden_dims)
      if (d <= 0) throw UsageError("layer_dims entries must be positive");
  }
};

struct EpochStats {
  int epoch = 0;        // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;   // 1-based epoch whose parameters are returned
  double best_val_acc = 0.0;
  std::string stop_reason;  // "early" | "max_epochs"
};

template <typename S>
struct TrainOutput {
  HyperGATModel<S> model;  // parameters from the best-validation epoch
  TrainHistory history;
};

template <typename S>
int argmax_label(std::span<const S> logits) {
  return static_cast<int>(
      std::max_element(logits.begin(), logits.end()) - logits.begin());
}

template <typename S>
int predict_one(const HyperGATModel<S>& model, const DocGraph& g) {
  const auto cache = forward(model, g.hg, g.flat, Mode::eval, nullptr);
  return argmax_label(std::span<const S>(cache.logits));
}

template <typename S>
double eval_accuracy(const HyperGATModel<S>& model,
                     std::span<const DocGraph> docs) {
  if (docs.empty()) throw UsageError("eval_accuracy on an empty set");
  std::size_t hits = 0;
  for (const DocGraph& g : docs)
    if (predict_one(model, g) == g.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(docs.size());
}

template <typename S>
TrainOutput<S> train(const TrainConfig& cfg,
                     std::span<const DocGraph> train_graphs,
                     std::span<const DocGraph> val_graphs, int vocab_size,
                     int classes) {
  cfg.validate();
  if (train_graphs.empty()) throw DataError("training set is empty");
  if (val_graphs.empty()) throw DataError("validation set is empty");

  std::vector<int> dims;
  dims.push_back(vocab_size);
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  HyperGATModel<S> model =
      init_model<S>(dims, classes, cfg.variant, cfg.dropout_p, cfg.seed);

  ModelGrads<S> grads(model);
  std::vector<AdamMoments<S>> moments;
  for_each_param(model, grads,
                 [&moments](const std::string&, std::vector<S>& p,
                            std::vector<S>&, bool) {
                   moments.emplace_back(p.size());
                 });
  const AdamConfig adam_cfg;

  // Separate stream from the one init_model consumed, so reinitializing the
  // model never shifts the shuffle/dropout sequence.
  Rng rng(cfg.seed + 0x517cc1b727220a95ULL);

  std::vector<std::size_t> order(train_graphs.size());
  std::iota(order.begin(), order.end(), std::size_t(0));

  TrainOutput<S> out;
  TrainHistory& hist = out.history;
  double best_val = -1.0;
  int stall = 0;
  std::int64_t step = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t lo = 0; lo < order.size();
         lo += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t hi =
          std::min(order.size(), lo + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const DocGraph*> batch;
      batch.reserve(hi - lo);
      for (std::size_t i = lo; i < hi; ++i)
        batch.push_back(&train_graphs[order[i]]);

      grads.zero();
      S loss;
      try {
        loss = batch_loss<S>(model, batch, Mode::train, cfg.l2_lambda, &rng,
                             grads);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(n_batches + 1) + ": " + e.what());
      }
      ++step;
      std::size_t pi = 0;
      for_each_param(model, grads,
                     [&](const std::string& name, std::vector<S>& p,
                         std::vector<S>& g, bool) {
                       adam_step<S>(p, g, moments[pi++], step, cfg.lr, adam_cfg,
                                    name);
                     });
      loss_sum += static_cast<double>(loss);
      ++n_batches;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(n_batches);
    stats.train_acc = eval_accuracy(model, train_graphs);
    stats.val_acc = eval_accuracy(model, val_graphs);
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    hist.epochs.push_back(stats);

    if (stats.val_acc > best_val) {
      best_val = stats.val_acc;
      hist.best_epoch = epoch;
      out.model = model;  // snapshot; facing ties we keep the first occurrence
      stall = 0;
    } else {
      ++stall;
    }
    if (stall >= cfg.patience) {
      hist.stop_reason = "early";
      break;
    }
  }
  if (hist.stop_reason.empty()) hist.stop_reason = "max_epochs";
  hist.best_val_acc = best_val;
  return out;
}

// Inductive prediction of raw, possibly entirely unseen text: index against
// the frozen vocabulary, build the hypergraph, run one eval forward. A
// document with no in-vocabulary token cannot form a hypergraph and falls
// back to class 0; callers surface the flag as a warning.
struct Prediction {
  int label_id = 0;
  bool degenerate = false;
};

template <typename S>
Prediction predict_text(const HyperGATModel<S>& model, const TokenizedDoc& raw,
                        const Vocabulary& vocab, const TopicModel* topics,
                        const BuildOptions& opts) {
  const Document doc = index_document(raw, vocab, /*label_id=*/-1, Split::test);
  if (doc.degenerate()) return {0, true};
  const DocGraph g = make_doc_graph(doc, topics, opts);
  const auto cache = forward(model, g.hg, g.flat, Mode::eval, nullptr);
  return {argmax_label(std::span<const S>(cache.logits)), false};
}

}  // namespace hypergat
