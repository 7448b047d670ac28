#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hypergat/error.hpp"
#include "hypergat/io_audit.hpp"
#include "hypergat/lda.hpp"
#include "hypergat/text.hpp"

namespace hypergat {

// Flat key-value settings covering the whole pipeline. Every key is
// registered with a default; unknown keys are rejected so typos cannot
// silently fall back to defaults. The resolved map is echoed into every
// output artifact.
class Config {
 public:
  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        // trainer
        {"lr", "0.001"},
        {"batch_size", "8"},
        {"l2_lambda", "1e-06"},
        {"dropout_p", "0.3"},
        {"max_epochs", "100"},
        {"patience", "5"},
        {"seed", "42"},
        {"variant", "full"},
        {"layer_dims", "300,100"},
        // corpus preparation
        {"data.min_freq", "auto"},  // auto: 5 when > 5000 train docs, else 1
        {"split.ratio", "0.9"},
        // topic model
        {"lda.topics", "auto"},     // auto: one topic per class
        {"lda.topk", "10"},
        {"lda.alpha", "auto"},      // auto: 50 / topics
        {"lda.beta", "0.01"},
        {"lda.iters", "200"},
        {"lda.seed", "7"},
        // hypergraph construction
        {"edges.sequential", "true"},
        {"edges.semantic", "true"},
        {"semantic.rank_within_doc", "false"},
        // evaluation
        {"eval.runs", "1"},
        {"eval.seed", "42"},
    };
    return d;
  }

  Config() : values_(defaults()) {}

  void set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end())
      throw UsageError("unknown config key '" + key + "'");
    it->second = value;
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw std::logic_error("unregistered config key '" + key + "'");
    return it->second;
  }

  bool is_auto(const std::string& key) const { return get(key) == "auto"; }

  double get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw UsageError("config key '" + key + "' is not a number: '" + v + "'");
    }
  }

  long long get_int(const std::string& key) const {
    const std::string& v = get(key);
    try {
      std::size_t pos = 0;
      const long long x = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw UsageError("config key '" + key + "' is not an integer: '" + v +
                       "'");
    }
  }

  std::uint64_t get_u64(const std::string& key) const {
    const long long x = get_int(key);
    if (x < 0)
      throw UsageError("config key '" + key + "' must be non-negative");
    return static_cast<std::uint64_t>(x);
  }

  bool get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("config key '" + key + "' is not a boolean: '" + v + "'");
  }

  std::vector<int> get_int_list(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<int> out;
    std::stringstream ss(v);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = trim(part);
      if (part.empty()) continue;
      try {
        std::size_t pos = 0;
        out.push_back(std::stoi(part, &pos));
        if (pos != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw UsageError("config key '" + key + "' has a non-integer entry: '" +
                         part + "'");
      }
    }
    if (out.empty())
      throw UsageError("config key '" + key + "' lists no values");
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  void parse_stream(std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string stripped = trim(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw UsageError(origin + ":" + std::to_string(lineno) +
                         ": expected key = value");
      const std::string key = trim(stripped.substr(0, eq));
      const std::string value = trim(stripped.substr(eq + 1));
      if (key.empty())
        throw UsageError(origin + ":" + std::to_string(lineno) + ": empty key");
      try {
        set(key, value);
      } catch (const UsageError& e) {
        throw UsageError(origin + ":" + std::to_string(lineno) + ": " +
                         e.what());
      }
    }
  }

  static Config load(const std::string& path) {
    Config cfg;
    auto in = io::open_input(path);
    cfg.parse_stream(in, path);
    return cfg;
  }

 private:
  std::map<std::string, std::string> values_;
};

// "auto" resolution for data.min_freq: rare-word pruning only pays off on
// corpora large enough to have a stable tail.
inline int resolve_min_freq(const Config& cfg, std::size_t n_train_docs) {
  if (cfg.is_auto("data.min_freq")) return n_train_docs > 5000 ? 5 : 1;
  const long long v = cfg.get_int("data.min_freq");
  if (v < 1) throw UsageError("data.min_freq must be >= 1");
  return static_cast<int>(v);
}

inline LdaConfig resolve_lda(const Config& cfg, int n_classes) {
  LdaConfig lda;
  lda.topics = cfg.is_auto("lda.topics")
                   ? n_classes
                   : static_cast<int>(cfg.get_int("lda.topics"));
  if (lda.topics <= 0) throw UsageError("lda.topics must be positive");
  lda.top_k = static_cast<int>(cfg.get_int("lda.topk"));
  lda.alpha = cfg.is_auto("lda.alpha") ? 0.0 : cfg.get_double("lda.alpha");
  lda.beta = cfg.get_double("lda.beta");
  lda.iterations = static_cast<int>(cfg.get_int("lda.iters"));
  lda.seed = cfg.get_u64("lda.seed");
  return lda;
}

}  // namespace hypergat
