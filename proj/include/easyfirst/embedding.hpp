#pragma once

// Vocabularies, lookup tables, distance buckets, pre-trained vectors and
// externally computed per-token context vectors.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "easyfirst/autodiff.hpp"
#include "easyfirst/treebank.hpp"

namespace easyfirst {

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Symbol <-> id map. The first ids are reserved for the special symbols
/// passed at construction; id 0 is always the unknown symbol.
class Vocab {
 public:
  explicit Vocab(std::vector<std::string> specials) {
    if (specials.empty()) throw std::invalid_argument("Vocab needs at least the unknown symbol");
    for (auto& s : specials) insert(s);
    specials_ = symbols_.size();
  }

  static Vocab words() { return Vocab({"<unk>", "<pad-left>", "<pad-right>", "<root>"}); }
  static Vocab relations() { return Vocab({"<unk-rel>", "<no-rel>"}); }

  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kPadLeft = 1;
  static constexpr std::size_t kPadRight = 2;
  static constexpr std::size_t kRoot = 3;
  static constexpr std::size_t kUnkRel = 0;
  static constexpr std::size_t kNoRel = 1;

  /// Adds (or counts) a regular symbol and returns its id.
  std::size_t add(const std::string& s, std::size_t count = 1) {
    auto it = index_.find(s);
    if (it != index_.end()) {
      freq_[it->second] += count;
      return it->second;
    }
    const std::size_t id = insert(s);
    freq_[id] = count;
    return id;
  }

  std::size_t id(const std::string& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? kUnk : it->second;
  }
  bool contains(const std::string& s) const { return index_.count(s) != 0; }
  const std::string& symbol(std::size_t id) const { return symbols_.at(id); }
  std::size_t freq(std::size_t id) const { return freq_.at(id); }
  std::size_t size() const { return symbols_.size(); }
  std::size_t special_count() const { return specials_; }

  nlohmann::json to_json() const {
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = specials_; i < symbols_.size(); ++i) entries.push_back({symbols_[i], freq_[i]});
    std::vector<std::string> specials(symbols_.begin(), symbols_.begin() + static_cast<std::ptrdiff_t>(specials_));
    return {{"specials", specials}, {"entries", entries}};
  }

  static Vocab from_json(const nlohmann::json& j) {
    Vocab v(j.at("specials").get<std::vector<std::string>>());
    for (const auto& e : j.at("entries")) v.add(e.at(0).get<std::string>(), e.at(1).get<std::size_t>());
    return v;
  }

 private:
  std::size_t insert(const std::string& s) {
    if (index_.count(s)) throw std::invalid_argument("duplicate vocabulary symbol: " + s);
    index_.emplace(s, symbols_.size());
    symbols_.push_back(s);
    freq_.push_back(0);
    return symbols_.size() - 1;
  }

  std::vector<std::string> symbols_;
  std::vector<std::size_t> freq_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t specials_ = 0;
};

/// Thin view over a (vocab x dim) parameter.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(Parameter& table) : table_(&table) {}

  std::size_t dim() const { return table_->value.cols; }
  std::size_t rows() const { return table_->value.rows; }
  Parameter& parameter() const { return *table_; }
  bool trainable() const { return table_->trainable; }
  void set_trainable(bool t) { table_->trainable = t; }

  Expr lookup(Graph& g, std::size_t id) const {
    if (id >= rows())
      throw EmbeddingError("embedding " + table_->name + ": id " + std::to_string(id) + " out of range (" +
                           std::to_string(rows()) + " rows)");
    return g.lookup(*table_, id);
  }

 private:
  Parameter* table_ = nullptr;
};

inline Tensor uniform_tensor(std::size_t rows, std::size_t cols, double range, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-range, range);
  Tensor t(rows, cols);
  for (double& v : t.data) v = dist(rng);
  return t;
}

/// Glorot-uniform matrix.
inline Tensor glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  return uniform_tensor(rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)), rng);
}

/// Signed head-minus-modifier distance, clipped to [-cap, cap], one bucket per value.
struct DistanceBucketer {
  int cap = 10;

  std::size_t bucket_count() const { return static_cast<std::size_t>(2 * cap + 1); }
  std::size_t bucket(int distance) const {
    const int clipped = std::clamp(distance, -cap, cap);
    return static_cast<std::size_t>(clipped + cap);
  }
  std::size_t bucket(int head_index, int modifier_index) const { return bucket(head_index - modifier_index); }
};

/// Word dropout: a training token of frequency `freq` is replaced by UNK
/// with probability alpha / (alpha + freq).
inline bool drop_to_unk(std::size_t freq, double alpha, std::mt19937_64& rng) {
  if (alpha <= 0) return false;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < alpha / (alpha + static_cast<double>(freq));
}

struct PretrainedReport {
  std::size_t matched = 0;
  std::size_t vocab_words = 0;
  std::size_t lines = 0;
  double coverage() const { return vocab_words ? static_cast<double>(matched) / static_cast<double>(vocab_words) : 0.0; }
};

/// Loads `word v1 ... vdim` lines into the rows of `table` for words present
/// in `vocab`. Rows of words absent from the file are left untouched. A
/// leading word2vec-style "count dim" header line is skipped.
inline PretrainedReport load_pretrained(std::istream& in, const Vocab& vocab, Parameter& table) {
  PretrainedReport rep;
  rep.vocab_words = vocab.size() - vocab.special_count();
  std::vector<char> seen(vocab.size(), 0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    std::vector<double> values;
    std::string tok;
    while (ls >> tok) {
      try {
        values.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw EmbeddingError("pretrained vectors line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    if (lineno == 1 && values.size() == 1 && word.find_first_not_of("0123456789") == std::string::npos) continue;
    ++rep.lines;
    if (values.size() != table.value.cols)
      throw EmbeddingError("pretrained vectors line " + std::to_string(lineno) + ": dimension " +
                           std::to_string(values.size()) + ", expected " + std::to_string(table.value.cols));
    if (!vocab.contains(word)) continue;
    const std::size_t id = vocab.id(word);
    if (id < vocab.special_count()) continue;
    std::copy(values.begin(), values.end(), table.value.data.begin() + static_cast<std::ptrdiff_t>(id * table.value.cols));
    if (!seen[id]) {
      seen[id] = 1;
      ++rep.matched;
    }
  }
  return rep;
}

/// Per-token vectors computed outside the parser (e.g. by a pretrained
/// language model), one vector per token of every sentence.
struct ExternalContext {
  std::size_t width = 0;
  std::vector<std::vector<std::vector<double>>> vectors;  // [sentence][token][dim]

  bool enabled() const { return width > 0; }
};

/// Blocks of one line per token (space-separated reals), blocks separated by
/// blank lines, aligned with `sentences`. An empty stream disables the hook.
inline ExternalContext load_external_context(std::istream& in, const std::vector<SentenceRecord>& sentences) {
  ExternalContext ctx;
  std::vector<std::vector<std::vector<double>>> blocks;
  std::vector<std::vector<double>> cur;
  std::string line;
  std::size_t lineno = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      if (!cur.empty()) blocks.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    any = true;
    std::istringstream ls(line);
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) {
      try {
        v.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw EmbeddingError("context vectors line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    if (ctx.width == 0) ctx.width = v.size();
    if (v.size() != ctx.width)
      throw EmbeddingError("context vectors line " + std::to_string(lineno) + ": width " + std::to_string(v.size()) +
                           ", expected " + std::to_string(ctx.width));
    cur.push_back(std::move(v));
  }
  if (!cur.empty()) blocks.push_back(std::move(cur));
  if (!any) return ctx;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (s >= blocks.size())
      throw EmbeddingError("context vectors: missing block for sentence " + std::to_string(s + 1));
    if (blocks[s].size() != sentences[s].size())
      throw EmbeddingError("context vectors: sentence " + std::to_string(s + 1) + " has " +
                           std::to_string(sentences[s].size()) + " tokens but " + std::to_string(blocks[s].size()) +
                           " vectors");
  }
  if (blocks.size() != sentences.size())
    throw EmbeddingError("context vectors: " + std::to_string(blocks.size()) + " blocks for " +
                         std::to_string(sentences.size()) + " sentences");
  ctx.vectors = std::move(blocks);
  return ctx;
}

inline ExternalContext load_external_context_file(const std::string& path, const std::vector<SentenceRecord>& sentences) {
  std::ifstream in(path);
  if (!in) throw EmbeddingError("cannot open context vectors " + path);
  return load_external_context(in, sentences);
}

}  // namespace easyfirst
