#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hypergat/config.hpp"
#include "hypergat/error.hpp"
#include "hypergat/io_audit.hpp"
#include "hypergat/lda.hpp"
#include "hypergat/text.hpp"

namespace hypergat {

inline constexpr const char* kSpecVersion = "1";

// ---------------------------------------------------------------------------
// little-endian primitives

namespace bin {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline void put_i32(std::ostream& out, std::int32_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
}

inline void put_u8(std::ostream& out, std::uint8_t v) {
  out.put(static_cast<char>(v));
}

inline void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

inline std::uint32_t take_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw DataError("truncated file while reading " + what);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t take_u64(std::istream& in, const std::string& what) {
  const std::uint64_t lo = take_u32(in, what);
  const std::uint64_t hi = take_u32(in, what);
  return lo | (hi << 32);
}

inline std::int32_t take_i32(std::istream& in, const std::string& what) {
  return static_cast<std::int32_t>(take_u32(in, what));
}

inline std::uint8_t take_u8(std::istream& in, const std::string& what) {
  const int c = in.get();
  if (c == std::istream::traits_type::eof())
    throw DataError("truncated file while reading " + what);
  return static_cast<std::uint8_t>(c);
}

inline float take_f32(std::istream& in, const std::string& what) {
  const std::uint32_t bits = take_u32(in, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace bin

// FNV-1a over the vocabulary words; checkpoints embed it so a model is never
// silently applied on top of a different vocabulary.
inline std::string vocab_hash(const Vocabulary& vocab) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& w : vocab.words) {
    for (char c : w) mix(static_cast<unsigned char>(c));
    mix('\n');
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// vocab.txt: `word<TAB>count` per line, vocabulary order

inline void write_vocab(const std::string& path, const Vocabulary& vocab) {
  auto out = io::open_output(path);
  for (std::size_t i = 0; i < vocab.words.size(); ++i)
    out << vocab.words[i] << '\t' << vocab.counts[i] << '\n';
  if (!out) throw DataError("failed writing " + path);
}

inline Vocabulary read_vocab(const std::string& path) {
  auto in = io::open_input(path);
  Vocabulary vocab;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected word<TAB>count");
    const std::string word = line.substr(0, tab);
    std::uint64_t count = 0;
    try {
      count = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad count");
    }
    if (!vocab.index.emplace(word, static_cast<int>(vocab.words.size())).second)
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate word");
    vocab.words.push_back(word);
    vocab.counts.push_back(count);
  }
  if (vocab.words.empty()) throw DataError(path + ": empty vocabulary");
  return vocab;
}

// ---------------------------------------------------------------------------
// binary document store

struct DocStore {
  std::vector<std::string> labels;  // class names, id order
  std::vector<Document> docs;
  nlohmann::json config_echo;
};

inline constexpr char kDocMagic[5] = {'H', 'G', 'D', 'S', '1'};

inline void write_docs(const std::string& path, const DocStore& store) {
  auto out = io::open_output(path, /*binary=*/true);
  out.write(kDocMagic, 5);
  nlohmann::json header;
  header["spec_version"] = kSpecVersion;
  header["labels"] = store.labels;
  header["n_docs"] = store.docs.size();
  header["config"] = store.config_echo;
  const std::string hs = header.dump();
  bin::put_u32(out, static_cast<std::uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const Document& d : store.docs) {
    bin::put_u64(out, static_cast<std::uint64_t>(d.id));
    bin::put_i32(out, d.label_id);
    bin::put_u8(out, static_cast<std::uint8_t>(d.split));
    bin::put_u32(out, static_cast<std::uint32_t>(d.sentences.size()));
    for (const auto& sent : d.sentences) {
      bin::put_u32(out, static_cast<std::uint32_t>(sent.size()));
      for (int w : sent) bin::put_u32(out, static_cast<std::uint32_t>(w));
    }
  }
  if (!out) throw DataError("failed writing " + path);
}

inline DocStore read_docs(const std::string& path) {
  auto in = io::open_input(path, /*binary=*/true);
  char magic[5];
  if (!in.read(magic, 5) || std::memcmp(magic, kDocMagic, 5) != 0)
    throw DataError(path + " is not a document store");
  const std::uint32_t hlen = bin::take_u32(in, "doc store header");
  std::string hs(hlen, '\0');
  if (!in.read(hs.data(), hlen))
    throw DataError(path + ": truncated header");
  DocStore store;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
    store.labels = header.at("labels").get<std::vector<std::string>>();
    store.config_echo = header.value("config", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad header: " + e.what());
  }
  const auto n_docs = header.at("n_docs").get<std::uint64_t>();
  store.docs.reserve(n_docs);
  for (std::uint64_t k = 0; k < n_docs; ++k) {
    Document d;
    d.id = static_cast<std::int64_t>(bin::take_u64(in, "doc id"));
    d.label_id = bin::take_i32(in, "doc label");
    const auto split = bin::take_u8(in, "doc split");
    if (split > 2) throw DataError(path + ": bad split tag");
    d.split = static_cast<Split>(split);
    const std::uint32_t n_sent = bin::take_u32(in, "sentence count");
    d.sentences.resize(n_sent);
    for (auto& sent : d.sentences) {
      const std::uint32_t len = bin::take_u32(in, "sentence length");
      sent.resize(len);
      for (auto& w : sent)
        w = static_cast<int>(bin::take_u32(in, "word id"));
    }
    store.docs.push_back(std::move(d));
  }
  return store;
}

// ---------------------------------------------------------------------------
// topics.json

inline void write_topics(const std::string& path, const TopicModel& model,
                         const Vocabulary& vocab,
                         const nlohmann::json& config_echo) {
  nlohmann::json j;
  j["spec_version"] = kSpecVersion;
  j["T"] = model.topics;
  j["K"] = model.top_k;
  j["alpha"] = model.alpha;
  j["beta"] = model.beta;
  j["iters"] = model.iterations;
  j["seed"] = model.seed;
  j["vocab_size"] = model.vocab_size;
  j["config"] = config_echo;
  nlohmann::json topics = nlohmann::json::array();
  for (int t = 0; t < model.topics; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    nlohmann::json entry;
    entry["id"] = t;
    nlohmann::json words = nlohmann::json::array();
    for (int w : model.top_words[ut])
      words.push_back(vocab.words[static_cast<std::size_t>(w)]);
    entry["top_words"] = words;
    entry["ranking"] = model.ranking[ut];
    topics.push_back(std::move(entry));
  }
  j["topics"] = std::move(topics);
  auto out = io::open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path);
}

inline TopicModel read_topics(const std::string& path,
                              const Vocabulary& vocab) {
  auto in = io::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad JSON: " + e.what());
  }
  TopicModel model;
  try {
    model.topics = j.at("T").get<int>();
    model.top_k = j.at("K").get<int>();
    model.alpha = j.at("alpha").get<double>();
    model.beta = j.at("beta").get<double>();
    model.iterations = j.at("iters").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.vocab_size = j.at("vocab_size").get<std::size_t>();
    for (const auto& entry : j.at("topics")) {
      model.ranking.push_back(entry.at("ranking").get<std::vector<int>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad topic model: " + e.what());
  }
  if (model.vocab_size != vocab.words.size())
    throw DataError(path + ": topic model was fit on a different vocabulary (" +
                    std::to_string(model.vocab_size) + " words, have " +
                    std::to_string(vocab.words.size()) + ")");
  if (static_cast<int>(model.ranking.size()) != model.topics)
    throw DataError(path + ": topic count mismatch");
  for (const auto& order : model.ranking) {
    if (order.size() != model.vocab_size)
      throw DataError(path + ": ranking length mismatch");
    for (int w : order)
      if (w < 0 || static_cast<std::size_t>(w) >= model.vocab_size)
        throw DataError(path + ": ranking references unknown word id");
  }
  model.top_words.reserve(static_cast<std::size_t>(model.topics));
  for (int t = 0; t < model.topics; ++t)
    model.top_words.push_back(top_k_words(model, t, model.top_k));
  return model;
}

inline nlohmann::json config_echo_json(const Config& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : cfg.values()) j[k] = v;
  return j;
}

}  // namespace hypergat
