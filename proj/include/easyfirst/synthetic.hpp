#pragma once

// Synthetic dependency data: uniformly shaped random projective trees, and
// a small English-like grammar with PTB tags and Stanford-style relations in
// which prepositional-phrase attachment depends on the noun inside the
// phrase.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "easyfirst/treebank.hpp"

namespace easyfirst::synthetic {

namespace detail {

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline bool chance(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

inline void fill_span(std::vector<int>& heads, int l, int r, int head, std::mt19937_64& rng) {
  while (l <= r) {
    const int e = std::uniform_int_distribution<int>(l, r)(rng);
    const int m = std::uniform_int_distribution<int>(l, e)(rng);
    heads[static_cast<std::size_t>(m) - 1] = head;
    fill_span(heads, l, m - 1, m, rng);
    fill_span(heads, m + 1, e, m, rng);
    l = e + 1;
  }
}

}  // namespace detail

/// Random single-rooted projective tree over n tokens; entry i is the head of token i+1.
inline std::vector<int> random_projective_heads(int n, std::mt19937_64& rng) {
  std::vector<int> heads(static_cast<std::size_t>(n), 0);
  if (n == 0) return heads;
  const int root = std::uniform_int_distribution<int>(1, n)(rng);
  heads[static_cast<std::size_t>(root) - 1] = 0;
  detail::fill_span(heads, 1, root - 1, root, rng);
  detail::fill_span(heads, root + 1, n, root, rng);
  return heads;
}

/// Random sentence with a random projective gold tree and labels.
inline SentenceRecord random_sentence(int n, std::mt19937_64& rng) {
  static const std::vector<std::string> words{"the", "cat", "sat", "on", "mat", "a", "dog", "ran", "quickly", "and", "bird", "sang"};
  static const std::vector<std::string> tags{"DT", "NN", "VBD", "IN", "NN", "DT", "NN", "VBD", "RB", "CC", "NN", "VBD"};
  static const std::vector<std::string> rels{"det", "nsubj", "dobj", "prep", "pobj", "advmod", "cc", "conj"};
  std::vector<std::string> forms, pos;
  ArcList arcs;
  const auto heads = random_projective_heads(n, rng);
  for (int i = 0; i < n; ++i) {
    const std::size_t w = detail::pick(rng, words.size());
    forms.push_back(words[w]);
    pos.push_back(tags[w]);
    arcs.push_back({heads[static_cast<std::size_t>(i)], heads[static_cast<std::size_t>(i)] == 0 ? "root" : rels[detail::pick(rng, rels.size())]});
  }
  return make_record(forms, pos, arcs);
}

/// Generator for an English-like grammar. Prepositional phrases attach to
/// the nearest head on the right frontier of the clause (verb, object,
/// relative-clause verb or object, earlier prepositional objects) that a
/// fixed selectional table licenses for the pair (preposition, class of the
/// phrase's noun); unlicensed phrases attach to the main verb. Resolving an
/// attachment therefore needs the classes of candidate heads that may be
/// far away and of a noun buried inside the phrase.
class Grammar {
 public:
  explicit Grammar(std::uint64_t seed) : rng_(seed) {
    std::mt19937_64 table_rng(0x5e1ec7);  // shared by every seed
    for (auto& per_head : licensed_)
      for (auto& per_prep : per_head)
        for (bool& ok : per_prep) ok = detail::chance(table_rng, 0.35);
  }

  SentenceRecord sentence() {
    nodes_.clear();
    const std::size_t root = clause(true, 0);
    nodes_[root].rel = "root";
    if (detail::chance(rng_, 0.85)) attach_right(root, leaf(".", ".", "punct"));
    std::vector<std::string> forms, tags;
    ArcList arcs;
    std::vector<int> position(nodes_.size(), 0);
    std::vector<std::size_t> order;
    linearize(root, order);
    for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = static_cast<int>(i) + 1;
    for (std::size_t id : order) {
      forms.push_back(nodes_[id].form);
      tags.push_back(nodes_[id].tag);
      arcs.push_back({nodes_[id].parent == kNone ? 0 : position[nodes_[id].parent], nodes_[id].rel});
    }
    return make_record(forms, tags, arcs);
  }

  std::vector<SentenceRecord> corpus(std::size_t n) {
    std::vector<SentenceRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sentence());
    return out;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kNounClasses = 6;
  static constexpr std::size_t kVerbClasses = 4;
  static constexpr std::size_t kPreps = 7;

  struct Node {
    std::string form, tag, rel;
    std::size_t parent = kNone;
    std::vector<std::size_t> left, right;
    std::size_t head_class = 0;  // verb classes first, then noun classes
  };

  std::size_t leaf(const std::string& form, const std::string& tag, const std::string& rel, std::size_t cls = 0) {
    Node n;
    n.form = form;
    n.tag = tag;
    n.rel = rel;
    n.head_class = cls;
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }
  void attach_left(std::size_t head, std::size_t child) {
    nodes_[child].parent = head;
    nodes_[head].left.insert(nodes_[head].left.begin(), child);
  }
  void attach_right(std::size_t head, std::size_t child) {
    nodes_[child].parent = head;
    nodes_[head].right.push_back(child);
  }
  void linearize(std::size_t id, std::vector<std::size_t>& out) const {
    for (std::size_t c : nodes_[id].left) linearize(c, out);
    out.push_back(id);
    for (std::size_t c : nodes_[id].right) linearize(c, out);
  }

  const std::string& any(const std::vector<std::string>& v) { return v[detail::pick(rng_, v.size())]; }

  std::string noun_form(std::size_t cls) {
    static const std::vector<std::vector<std::string>> lists{
        {"telescope", "knife", "hammer", "key", "brush", "spoon", "rope", "ladder", "camera", "pencil", "needle", "shovel"},
        {"hat", "scarf", "logo", "stripe", "collar", "ribbon", "badge", "pocket", "button", "label", "sleeve", "patch"},
        {"park", "city", "garden", "kitchen", "office", "harbor", "market", "station", "library", "forest", "valley", "hall"},
        {"morning", "evening", "week", "winter", "night", "weekend", "summer", "holiday", "afternoon", "month", "season", "dawn"},
        {"teacher", "farmer", "student", "doctor", "child", "pilot", "artist", "baker", "sailor", "judge", "nurse", "miner"},
        {"box", "letter", "table", "painting", "engine", "bottle", "window", "map", "basket", "record", "lamp", "coin"}};
    return any(lists[cls]);
  }

  /// Noun phrase; returns the head noun. `depth` bounds relative-clause nesting.
  std::size_t noun_phrase(std::size_t cls, const std::string& rel, int depth, std::vector<std::size_t>* frontier) {
    static const std::vector<std::string> dets{"the", "a", "this", "every", "some", "that", "my", "no"};
    static const std::vector<std::string> adjs{"old", "red", "small", "heavy", "bright", "quiet", "strange", "new",
                                               "wooden", "clever", "broken", "tall", "green", "famous", "empty", "cold"};
    const bool plural = detail::chance(rng_, 0.3);
    std::string form = noun_form(cls);
    if (plural) form += form.back() == 'x' || form.back() == 'h' ? "es" : "s";
    const std::size_t head = leaf(form, plural ? "NNS" : "NN", rel, kVerbClasses + cls);
    if (detail::chance(rng_, 0.15)) attach_left(head, leaf(noun_form(detail::pick(rng_, kNounClasses)), "NN", "nn"));
    const int n_adj = detail::chance(rng_, 0.5) ? 1 + static_cast<int>(detail::pick(rng_, 3)) : 0;
    for (int i = 0; i < n_adj; ++i) {
      const std::size_t adj = leaf(any(adjs), "JJ", "amod");
      if (detail::chance(rng_, 0.15)) attach_left(adj, leaf(any({"very", "rather", "quite"}), "RB", "advmod"));
      attach_left(head, adj);
    }
    if (detail::chance(rng_, 0.85)) attach_left(head, leaf(any(dets), "DT", "det"));
    if (frontier) frontier->push_back(head);
    if (depth < 1 && frontier && detail::chance(rng_, 0.2)) {
      // Relative clause: "that" is the subject of the embedded verb.
      const std::size_t v = verb(true);
      attach_left(v, leaf("that", "WDT", "nsubj"));
      attach_right(head, v);
      nodes_[v].rel = "rcmod";
      frontier->push_back(v);
      const std::size_t obj = noun_phrase(detail::pick(rng_, kNounClasses), "dobj", depth + 1, frontier);
      attach_right(v, obj);
      prep_phrases(v, *frontier, depth + 1, detail::chance(rng_, 0.5) ? 1 : 0);
    }
    return head;
  }

  std::size_t verb(bool transitive) {
    static const std::vector<std::vector<std::string>> trans{{"saw", "watched", "noticed", "studied"},
                                                             {"opened", "fixed", "cleaned", "painted"},
                                                             {"carried", "moved", "pushed", "dragged"},
                                                             {"sold", "bought", "found", "lost"}};
    static const std::vector<std::vector<std::string>> intrans{{"looked", "stared"}, {"worked", "waited"}, {"walked", "ran"}, {"paid", "slept"}};
    const std::size_t cls = detail::pick(rng_, kVerbClasses);
    const bool present = detail::chance(rng_, 0.3);
    std::string f = transitive ? any(trans[cls]) : any(intrans[cls]);
    return leaf(present ? "often-" + f : f, present ? "VBZ" : "VBD", "", cls);
  }

  /// Adds `count` prepositional phrases after `verb_node`, each attached to
  /// the nearest licensed frontier head (or the verb). The frontier is cut
  /// back to the chosen head, keeping every tree projective.
  void prep_phrases(std::size_t verb_node, std::vector<std::size_t>& frontier, int depth, int count) {
    static const std::vector<std::string> preps{"with", "in", "at", "near", "of", "on", "for"};
    for (int i = 0; i < count; ++i) {
      const std::size_t p = detail::pick(rng_, kPreps);
      const std::size_t cls = detail::pick(rng_, kNounClasses);
      const std::size_t pp = leaf(preps[p], "IN", "prep");
      std::size_t chosen = kNone, at = 0;
      for (std::size_t k = frontier.size(); k-- > 0;) {
        if (licensed_[nodes_[frontier[k]].head_class][p][cls]) {
          chosen = frontier[k];
          at = k;
          break;
        }
      }
      if (chosen == kNone) {
        chosen = verb_node;
        at = static_cast<std::size_t>(std::find(frontier.begin(), frontier.end(), verb_node) - frontier.begin());
      }
      frontier.resize(at + 1);
      attach_right(chosen, pp);
      std::vector<std::size_t> inner;
      const std::size_t noun = noun_phrase(cls, "pobj", depth + 1, &inner);
      attach_right(pp, noun);
      frontier.push_back(noun);
    }
  }

  std::size_t clause(bool with_subject, int depth) {
    const bool transitive = detail::chance(rng_, 0.7);
    const std::size_t v = verb(transitive);
    if (with_subject) {
      if (detail::chance(rng_, 0.2)) {
        attach_left(v, leaf(any({"he", "she", "they", "we", "it"}), "PRP", "nsubj"));
      } else {
        std::vector<std::size_t> subj_frontier;
        const std::size_t subj = noun_phrase(detail::chance(rng_, 0.6) ? 4 : detail::pick(rng_, kNounClasses), "nsubj", 1, &subj_frontier);
        if (detail::chance(rng_, 0.2)) prep_phrases(subj, subj_frontier, 1, 1);
        attach_left(v, subj);
      }
    }
    if (detail::chance(rng_, 0.15)) attach_left(v, leaf(any({"never", "always", "quickly", "slowly"}), "RB", "advmod"));
    std::vector<std::size_t> frontier{v};
    if (transitive) {
      const std::size_t obj = noun_phrase(detail::pick(rng_, kNounClasses), "dobj", depth, &frontier);
      attach_right(v, obj);
      if (detail::chance(rng_, 0.1)) {
        frontier.resize(static_cast<std::size_t>(std::find(frontier.begin(), frontier.end(), obj) - frontier.begin()) + 1);
        attach_right(obj, leaf("and", "CC", "cc"));
        const std::size_t second = noun_phrase(detail::pick(rng_, kNounClasses), "conj", depth + 1, nullptr);
        attach_right(obj, second);
        frontier.push_back(second);
      }
    }
    const int n_pp = detail::chance(rng_, 0.75) ? 1 + static_cast<int>(detail::pick(rng_, 3)) : 0;
    prep_phrases(v, frontier, depth, n_pp);
    if (detail::chance(rng_, 0.1)) attach_right(v, leaf(any({"today", "again", "yesterday", "there"}), "RB", "advmod"));
    if (with_subject && detail::chance(rng_, 0.12)) {
      if (detail::chance(rng_, 0.5)) attach_right(v, leaf(",", ",", "punct"));
      attach_right(v, leaf("but", "CC", "cc"));
      const std::size_t second = clause(false, depth + 1);
      nodes_[second].rel = "conj";
      attach_right(v, second);
    }
    return v;
  }

  std::mt19937_64 rng_;
  std::vector<Node> nodes_;
  bool licensed_[kVerbClasses + kNounClasses][kPreps][kNounClasses] = {};
};

}  // namespace easyfirst::synthetic
