#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypergat/error.hpp"
#include "hypergat/rng.hpp"

namespace hypergat {

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "test";
  }
}

struct RawRecord {
  std::string label;
  std::string text;
};

// Sentences as token strings, before vocabulary indexing.
struct TokenizedDoc {
  std::int64_t id = 0;
  std::string label;
  std::vector<std::vector<std::string>> sentences;
};

// Sentences as vocabulary indices; out-of-vocabulary tokens already dropped
// and empty sentences removed. A document with zero in-vocabulary tokens is
// degenerate (fatal in training splits, class-0 fallback at inference).
struct Document {
  std::int64_t id = 0;
  int label_id = 0;
  Split split = Split::train;
  std::vector<std::vector<int>> sentences;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }
  bool degenerate() const { return token_count() == 0; }
};

// Word <-> index bijection plus training-corpus frequencies, ordered by
// (frequency desc, word asc). Built from the training file only.
struct Vocabulary {
  std::vector<std::string> words;
  std::vector<std::int64_t> counts;
  std::unordered_map<std::string, int> index;

  std::size_t size() const { return words.size(); }

  int lookup(const std::string& w) const {
    auto it = index.find(w);
    return it == index.end() ? -1 : it->second;
  }
};

// Class names in lexicographic order; position is the label id.
struct LabelSet {
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }

  int id_of(const std::string& name) const {
    auto it = std::lower_bound(names.begin(), names.end(), name);
    if (it == names.end() || *it != name) return -1;
    return static_cast<int>(it - names.begin());
  }
};

// ---------------------------------------------------------------------------
// dataset loading: UTF-8 TSV, one `label<TAB>text` per line

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<RawRecord> parse_dataset(std::istream& in,
                                            const std::string& origin) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(origin + ":" + std::to_string(lineno) +
                      ": expected label<TAB>text");
    RawRecord rec;
    rec.label = trim(line.substr(0, tab));
    rec.text = line.substr(tab + 1);
    if (rec.label.empty())
      throw DataError(origin + ":" + std::to_string(lineno) + ": empty label");
    if (trim(rec.text).empty())
      throw DataError(origin + ":" + std::to_string(lineno) + ": empty text");
    records.push_back(std::move(rec));
  }
  return records;
}

// ---------------------------------------------------------------------------
// tokenizer: sentences split on .!? followed by whitespace or end of input;
// tokens are maximal runs of ASCII alphanumerics plus internal apostrophes,
// lowercased; everything else separates. Bytes >= 0x80 are separators too,
// which keeps the rules byte-deterministic on arbitrary UTF-8.

namespace detail {

inline bool is_alnum_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

inline char lower_byte(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                : static_cast<char>(c);
}

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline std::vector<std::string> tokenize_sentence(const std::string& s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (is_alnum_byte(c)) {
      cur.push_back(lower_byte(c));
    } else if (c == '\'' && !cur.empty() && i + 1 < s.size() &&
               is_alnum_byte(static_cast<unsigned char>(s[i + 1]))) {
      cur.push_back('\'');
    } else {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace detail

inline std::vector<std::vector<std::string>> tokenize(const std::string& text) {
  std::vector<std::vector<std::string>> sentences;
  std::string cur;
  auto flush = [&]() {
    auto toks = detail::tokenize_sentence(cur);
    if (!toks.empty()) sentences.push_back(std::move(toks));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      const bool at_end = i + 1 == text.size();
      if (at_end ||
          detail::is_space_byte(static_cast<unsigned char>(text[i + 1]))) {
        flush();
        continue;
      }
    }
    cur.push_back(c);
  }
  flush();
  return sentences;
}

// ---------------------------------------------------------------------------
// vocabulary over training documents

inline Vocabulary build_vocabulary(const std::vector<TokenizedDoc>& train_docs,
                                   std::int64_t min_freq) {
  if (min_freq < 1) throw UsageError("min_freq must be >= 1");
  std::map<std::string, std::int64_t> freq;  // ordered: deterministic ties
  for (const auto& d : train_docs)
    for (const auto& sent : d.sentences)
      for (const auto& tok : sent) ++freq[tok];

  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [w, c] : freq)
    if (c >= min_freq) kept.emplace_back(w, c);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (kept.empty())
    throw DataError("vocabulary is empty at min_freq=" +
                    std::to_string(min_freq));

  Vocabulary v;
  v.words.reserve(kept.size());
  v.counts.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    v.index.emplace(kept[i].first, static_cast<int>(i));
    v.words.push_back(std::move(kept[i].first));
    v.counts.push_back(kept[i].second);
  }
  return v;
}

inline LabelSet build_label_set(const std::vector<TokenizedDoc>& docs) {
  std::set<std::string> names;
  for (const auto& d : docs) names.insert(d.label);
  LabelSet ls;
  ls.names.assign(names.begin(), names.end());
  if (ls.names.size() < 2)
    throw DataError("need at least 2 classes, found " +
                    std::to_string(ls.names.size()));
  return ls;
}

// Index a tokenized document against a frozen vocabulary. OOV tokens are
// dropped; sentences left empty disappear.
inline Document index_document(const TokenizedDoc& doc, const Vocabulary& vocab,
                               int label_id, Split split) {
  Document out;
  out.id = doc.id;
  out.label_id = label_id;
  out.split = split;
  for (const auto& sent : doc.sentences) {
    std::vector<int> ids;
    for (const auto& tok : sent) {
      const int idx = vocab.lookup(tok);
      if (idx >= 0) ids.push_back(idx);
    }
    if (!ids.empty()) out.sentences.push_back(std::move(ids));
  }
  return out;
}

// ---------------------------------------------------------------------------
// seeded 90/10 partition; |train| = round(ratio * N)

template <typename DocT>
std::pair<std::vector<DocT>, std::vector<DocT>> split_train_val(
    const std::vector<DocT>& docs, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw UsageError("split ratio must be in (0, 1)");
  const std::size_t n = docs.size();
  const std::size_t n_train =
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  if (n_train == 0 || n_train == n)
    throw DataError("train/val split leaves an empty partition (n=" +
                    std::to_string(n) + ", ratio=" + std::to_string(ratio) +
                    ")");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;
  std::pair<std::vector<DocT>, std::vector<DocT>> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_train[i])
      out.first.push_back(docs[i]);
    else
      out.second.push_back(docs[i]);
  }
  return out;
}

}  // namespace hypergat
