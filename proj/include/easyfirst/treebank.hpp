#pragma once

// CoNLL-X / CoNLL-U reading and writing plus tree well-formedness checks.

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace easyfirst {

class ConllError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kNoHead = -1;

struct Token {
  int index = 0;          // 1-based
  std::string form;
  std::string pos;        // fine tag when present, else coarse tag
  int head = kNoHead;     // 0 = ROOT, kNoHead = not annotated
  std::string rel;
  std::array<std::string, 10> columns;  // raw columns, kept for writing back
};

struct SentenceRecord {
  std::vector<Token> tokens;
  std::vector<std::string> comments;
  // Multiword-token and empty-node lines, keyed by how many tokens precede them.
  std::vector<std::pair<std::size_t, std::string>> extra_lines;

  std::size_t size() const { return tokens.size(); }
  bool has_gold() const { return !tokens.empty() && tokens.front().head != kNoHead; }
};

struct Arc {
  int head = kNoHead;
  std::string rel;
  bool operator==(const Arc&) const = default;
};

using ArcList = std::vector<Arc>;  // entry i is the arc of token i+1

inline ArcList gold_arcs(const SentenceRecord& s) {
  ArcList arcs;
  arcs.reserve(s.size());
  for (const Token& t : s.tokens) arcs.push_back({t.head, t.rel});
  return arcs;
}

/// Empty string when `heads` (1-based tokens, entry i for token i+1) is a
/// single-rooted tree, otherwise a description of the first problem found.
inline std::string tree_problem(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const int h = heads[i];
    if (h < 0 || h > n) return "token " + std::to_string(i + 1) + " has head " + std::to_string(h) + " out of range";
    if (h == i + 1) return "token " + std::to_string(i + 1) + " is its own head";
    roots += h == 0;
  }
  if (n > 0 && roots != 1) return std::to_string(roots) + " tokens attached to root (expected 1)";
  // Walk up from every token; a walk longer than n steps must loop.
  for (int i = 0; i < n; ++i) {
    int cur = i + 1;
    for (int steps = 0; cur != 0; ++steps) {
      if (steps > n) return "cycle through token " + std::to_string(i + 1);
      cur = heads[cur - 1];
    }
  }
  return {};
}

inline std::vector<int> heads_of(const ArcList& arcs) {
  std::vector<int> h;
  h.reserve(arcs.size());
  for (const Arc& a : arcs) h.push_back(a.head);
  return h;
}

/// True when no two arcs cross (ROOT sits at position 0).
inline bool is_projective(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  for (int a = 1; a <= n; ++a) {
    const int l1 = std::min(a, heads[a - 1]), r1 = std::max(a, heads[a - 1]);
    for (int b = 1; b <= n; ++b) {
      const int l2 = std::min(b, heads[b - 1]), r2 = std::max(b, heads[b - 1]);
      if (l1 < l2 && l2 < r1 && r1 < r2) return false;
    }
  }
  return true;
}

namespace detail {

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.emplace_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

inline bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoi(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

}  // namespace detail

/// Reads CoNLL-X or CoNLL-U text. Lines may be tab-separated (10 columns);
/// multiword ("3-4") and empty-node ("5.1") lines are kept aside and not
/// treated as tokens. With `check_trees` off, head columns are read as given
/// (system output may contain cycles or self-loops; they simply score as errors).
inline std::vector<SentenceRecord> read_conll(std::istream& in, bool check_trees = true) {
  std::vector<SentenceRecord> out;
  SentenceRecord cur;
  bool open = false;
  std::size_t block_start = 0;
  std::string line;
  std::size_t lineno = 0;

  auto finish = [&] {
    if (!open) return;
    const std::size_t n = cur.tokens.size();
    bool any_gold = false, any_missing = false;
    for (const Token& t : cur.tokens) (t.head == kNoHead ? any_missing : any_gold) = true;
    if (any_gold && any_missing)
      throw ConllError("sentence " + std::to_string(out.size() + 1) + " (line " + std::to_string(block_start) +
                       "): head column only partially annotated");
    if (check_trees && any_gold && n > 0) {
      std::vector<int> heads;
      for (const Token& t : cur.tokens) heads.push_back(t.head);
      const std::string problem = tree_problem(heads);
      if (!problem.empty())
        throw ConllError("sentence " + std::to_string(out.size() + 1) + " (line " + std::to_string(block_start) +
                         "): " + problem);
    }
    out.push_back(std::move(cur));
    cur = SentenceRecord{};
    open = false;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      finish();
      continue;
    }
    if (!open) {
      open = true;
      block_start = lineno;
    }
    if (line[0] == '#') {
      cur.comments.push_back(line);
      continue;
    }
    auto cols = detail::split_tabs(line);
    if (cols.size() != 10)
      throw ConllError("line " + std::to_string(lineno) + ": expected 10 tab-separated columns, found " +
                       std::to_string(cols.size()));
    if (cols[0].find_first_of("-.") != std::string::npos) {
      cur.extra_lines.emplace_back(cur.tokens.size(), line);
      continue;
    }
    Token t;
    if (!detail::parse_int(cols[0], t.index) || t.index != static_cast<int>(cur.tokens.size()) + 1)
      throw ConllError("line " + std::to_string(lineno) + ": bad token id '" + cols[0] + "'");
    t.form = cols[1];
    t.pos = cols[4] != "_" ? cols[4] : cols[3];
    if (cols[6] != "_") {
      if (!detail::parse_int(cols[6], t.head) || t.head < 0)
        throw ConllError("line " + std::to_string(lineno) + ": bad head '" + cols[6] + "'");
      if (check_trees && t.head == t.index)
        throw ConllError("line " + std::to_string(lineno) + ": token " + cols[0] + " is its own head");
    }
    t.rel = cols[7] == "_" ? std::string() : cols[7];
    for (std::size_t i = 0; i < 10; ++i) t.columns[i] = std::move(cols[i]);
    cur.tokens.push_back(std::move(t));
  }
  finish();
  return out;
}

inline std::vector<SentenceRecord> read_conll_file(const std::string& path, bool check_trees = true) {
  std::ifstream in(path);
  if (!in) throw ConllError("cannot open " + path);
  return read_conll(in, check_trees);
}

inline std::vector<SentenceRecord> read_conll_string(const std::string& text) {
  std::istringstream in(text);
  return read_conll(in);
}

/// Writes records with the HEAD and DEPREL columns taken from `predicted`.
inline void write_conll(std::ostream& out, const std::vector<SentenceRecord>& records,
                        const std::vector<ArcList>& predicted) {
  if (records.size() != predicted.size())
    throw ConllError("write_conll: " + std::to_string(records.size()) + " sentences but " +
                     std::to_string(predicted.size()) + " predictions");
  for (std::size_t s = 0; s < records.size(); ++s) {
    const SentenceRecord& rec = records[s];
    if (rec.tokens.size() != predicted[s].size())
      throw ConllError("write_conll: sentence " + std::to_string(s + 1) + " has " + std::to_string(rec.tokens.size()) +
                       " tokens but " + std::to_string(predicted[s].size()) + " predicted arcs");
    for (const std::string& c : rec.comments) out << c << '\n';
    std::size_t extra = 0;
    for (std::size_t i = 0; i <= rec.tokens.size(); ++i) {
      while (extra < rec.extra_lines.size() && rec.extra_lines[extra].first == i) out << rec.extra_lines[extra++].second << '\n';
      if (i == rec.tokens.size()) break;
      auto cols = rec.tokens[i].columns;
      const Arc& a = predicted[s][i];
      cols[6] = a.head == kNoHead ? "_" : std::to_string(a.head);
      cols[7] = a.rel.empty() ? "_" : a.rel;
      for (std::size_t c = 0; c < 10; ++c) out << (c ? "\t" : "") << cols[c];
      out << '\n';
    }
    out << '\n';
  }
}

inline std::string write_conll_string(const std::vector<SentenceRecord>& records,
                                      const std::vector<ArcList>& predicted) {
  std::ostringstream out;
  write_conll(out, records, predicted);
  return out.str();
}

/// Build a minimal CoNLL-X record from forms, tags and (optional) gold arcs.
inline SentenceRecord make_record(const std::vector<std::string>& forms, const std::vector<std::string>& tags,
                                  const ArcList& arcs = {}) {
  SentenceRecord r;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    Token t;
    t.index = static_cast<int>(i) + 1;
    t.form = forms[i];
    t.pos = tags[i];
    if (!arcs.empty()) {
      t.head = arcs[i].head;
      t.rel = arcs[i].rel;
    }
    t.columns = {std::to_string(t.index), t.form, "_", t.pos, t.pos, "_",
                 t.head == kNoHead ? "_" : std::to_string(t.head), t.rel.empty() ? "_" : t.rel, "_", "_"};
    r.tokens.push_back(std::move(t));
  }
  return r;
}

}  // namespace easyfirst
