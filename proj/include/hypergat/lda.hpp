#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "hypergat/error.hpp"
#include "hypergat/rng.hpp"
#include "hypergat/text.hpp"

namespace hypergat {

struct LdaConfig {
  int topics = 0;           // 0 -> caller substitutes the class count
  int top_k = 10;
  double alpha = 0.0;       // 0 -> 50/T
  double beta = 0.01;
  int iterations = 200;
  std::uint64_t seed = 0;
};

// Per-topic word distributions. phi rows sum to 1 (smoothed, all entries
// positive); top_words holds the K highest-phi indices per topic with ties
// broken toward the smaller index.
struct TopicModel {
  int topics = 0;
  int top_k = 0;
  double alpha = 0.0;
  double beta = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::size_t vocab_size = 0;
  std::vector<std::vector<double>> phi;       // T x |V| (empty when reloaded)
  std::vector<std::vector<int>> ranking;      // T x |V|, words by phi desc
  std::vector<std::vector<int>> top_words;    // T x K (prefix of ranking)
};

inline std::vector<int> top_k_words(const std::vector<double>& phi_row, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > phi_row.size())
    throw UsageError("top-k exceeds vocabulary size (k=" + std::to_string(k) +
                     ", |V|=" + std::to_string(phi_row.size()) + ")");
  std::vector<int> idx(phi_row.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&](int a, int b) {
                      if (phi_row[a] != phi_row[b])
                        return phi_row[a] > phi_row[b];
                      return a < b;
                    });
  idx.resize(k);
  return idx;
}

inline std::vector<int> rank_words(const std::vector<double>& phi_row) {
  return top_k_words(phi_row, static_cast<int>(phi_row.size()));
}

// Top-K by stored ranking; works for reloaded models that no longer carry phi.
inline std::vector<int> top_k_words(const TopicModel& model, int t, int k) {
  if (t < 0 || t >= model.topics)
    throw UsageError("topic index out of range");
  const auto& order = model.ranking[static_cast<std::size_t>(t)];
  if (k < 0 || static_cast<std::size_t>(k) > order.size())
    throw UsageError("top-k exceeds vocabulary size (k=" + std::to_string(k) +
                     ", |V|=" + std::to_string(order.size()) + ")");
  return {order.begin(), order.begin() + k};
}

// Collapsed Gibbs sampler over token-topic assignments. The Dirichlet
// parameters are integrated out; each sweep resamples every token from
//   p(z=k) ~ (n_dk + alpha) * (n_kw + beta) / (n_k + |V| beta)
// Exposed as a class so tests can observe counts between sweeps.
class GibbsLda {
 public:
  GibbsLda(const std::vector<Document>& docs, std::size_t vocab_size, int topics,
           double alpha, double beta, std::uint64_t seed)
      : vocab_size_(vocab_size),
        topics_(topics),
        alpha_(alpha),
        beta_(beta),
        rng_(seed) {
    if (topics_ <= 0) throw UsageError("topic count must be positive");
    doc_words_.reserve(docs.size());
    for (const auto& d : docs) {
      std::vector<int> flat;
      for (const auto& s : d.sentences) flat.insert(flat.end(), s.begin(), s.end());
      if (!flat.empty()) doc_words_.push_back(std::move(flat));
    }
    if (doc_words_.empty()) throw DataError("LDA corpus has no tokens");

    topic_word_.assign(static_cast<std::size_t>(topics_),
                       std::vector<std::int64_t>(vocab_size_, 0));
    topic_total_.assign(static_cast<std::size_t>(topics_), 0);
    doc_topic_.assign(doc_words_.size(),
                      std::vector<std::int64_t>(static_cast<std::size_t>(topics_), 0));
    assign_.resize(doc_words_.size());
    for (std::size_t d = 0; d < doc_words_.size(); ++d) {
      assign_[d].resize(doc_words_[d].size());
      for (std::size_t n = 0; n < doc_words_[d].size(); ++n) {
        const int k = static_cast<int>(rng_.below(static_cast<std::uint64_t>(topics_)));
        assign_[d][n] = k;
        add(d, doc_words_[d][n], k, +1);
      }
    }
    cdf_.resize(static_cast<std::size_t>(topics_));
  }

  void sweep() {
    const double vbeta = static_cast<double>(vocab_size_) * beta_;
    for (std::size_t d = 0; d < doc_words_.size(); ++d) {
      for (std::size_t n = 0; n < doc_words_[d].size(); ++n) {
        const int w = doc_words_[d][n];
        const int old_k = assign_[d][n];
        add(d, w, old_k, -1);
        double acc = 0.0;
        for (int k = 0; k < topics_; ++k) {
          const auto uk = static_cast<std::size_t>(k);
          acc += (static_cast<double>(doc_topic_[d][uk]) + alpha_) *
                 (static_cast<double>(topic_word_[uk][static_cast<std::size_t>(w)]) + beta_) /
                 (static_cast<double>(topic_total_[uk]) + vbeta);
          cdf_[uk] = acc;
        }
        const double u = rng_.next_double() * acc;
        int new_k = topics_ - 1;
        for (int k = 0; k < topics_; ++k) {
          if (u < cdf_[static_cast<std::size_t>(k)]) {
            new_k = k;
            break;
          }
        }
        assign_[d][n] = new_k;
        add(d, w, new_k, +1);
      }
    }
  }

  // phi[t][w] = (n_tw + beta) / (n_t + |V| beta), from the current counts.
  std::vector<std::vector<double>> phi() const {
    const double vbeta = static_cast<double>(vocab_size_) * beta_;
    std::vector<std::vector<double>> out(
        static_cast<std::size_t>(topics_), std::vector<double>(vocab_size_));
    for (int t = 0; t < topics_; ++t) {
      const auto ut = static_cast<std::size_t>(t);
      const double denom = static_cast<double>(topic_total_[ut]) + vbeta;
      for (std::size_t w = 0; w < vocab_size_; ++w)
        out[ut][w] = (static_cast<double>(topic_word_[ut][w]) + beta_) / denom;
    }
    return out;
  }

  std::int64_t assigned_total() const {
    return std::accumulate(topic_total_.begin(), topic_total_.end(),
                           std::int64_t(0));
  }

  std::int64_t token_count() const {
    std::int64_t n = 0;
    for (const auto& d : doc_words_) n += static_cast<std::int64_t>(d.size());
    return n;
  }

 private:
  void add(std::size_t d, int w, int k, std::int64_t delta) {
    const auto uk = static_cast<std::size_t>(k);
    topic_word_[uk][static_cast<std::size_t>(w)] += delta;
    topic_total_[uk] += delta;
    doc_topic_[d][uk] += delta;
  }

  std::size_t vocab_size_;
  int topics_;
  double alpha_;
  double beta_;
  Rng rng_;
  std::vector<std::vector<int>> doc_words_;
  std::vector<std::vector<std::int64_t>> topic_word_;
  std::vector<std::int64_t> topic_total_;
  std::vector<std::vector<std::int64_t>> doc_topic_;
  std::vector<std::vector<int>> assign_;
  std::vector<double> cdf_;
};

inline TopicModel fit_lda(const std::vector<Document>& train_docs,
                          std::size_t vocab_size, const LdaConfig& cfg) {
  if (cfg.topics <= 0) throw UsageError("topic count must be positive");
  if (cfg.iterations < 0) throw UsageError("iterations must be >= 0");
  const double alpha =
      cfg.alpha > 0.0 ? cfg.alpha : 50.0 / static_cast<double>(cfg.topics);

  GibbsLda sampler(train_docs, vocab_size, cfg.topics, alpha, cfg.beta,
                   cfg.seed);
  for (int it = 0; it < cfg.iterations; ++it) sampler.sweep();

  TopicModel model;
  model.topics = cfg.topics;
  model.top_k = cfg.top_k;
  model.alpha = alpha;
  model.beta = cfg.beta;
  model.iterations = cfg.iterations;
  model.seed = cfg.seed;
  model.vocab_size = vocab_size;
  model.phi = sampler.phi();
  model.ranking.reserve(static_cast<std::size_t>(cfg.topics));
  model.top_words.reserve(static_cast<std::size_t>(cfg.topics));
  for (int t = 0; t < cfg.topics; ++t) {
    model.ranking.push_back(rank_words(model.phi[static_cast<std::size_t>(t)]));
    model.top_words.push_back(top_k_words(model, t, cfg.top_k));
  }
  return model;
}

}  // namespace hypergat
