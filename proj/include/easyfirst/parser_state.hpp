#pragma once

// Easy-first transition system: the pending list, the two attachment
// actions and the dynamic validity oracle. Representation updates are left
// to the model; everything here is purely structural.

#include <stdexcept>
#include <string>
#include <vector>

#include "easyfirst/subtree_encoder.hpp"
#include "easyfirst/treebank.hpp"

namespace easyfirst {

enum class ActionKind { attach_left, attach_right };

/// Action on the adjacent pending pair (pending[position], pending[position+1]).
/// attach_left makes the left member the head and removes the right one;
/// attach_right makes the right member the head and removes the left one.
/// `label` indexes the model's label space (always 0 when unlabeled).
struct Action {
  ActionKind kind = ActionKind::attach_left;
  std::size_t position = 0;
  std::size_t label = 0;

  bool operator==(const Action&) const = default;
};

inline std::string to_string(const Action& a) {
  return std::string(a.kind == ActionKind::attach_left ? "ATTACHLEFT(" : "ATTACHRIGHT(") + std::to_string(a.position) +
         (a.label ? "," + std::to_string(a.label) : "") + ")";
}

struct ChildLink {
  int token = 0;
  std::size_t relation = Vocab::kNoRel;
  SubtreeRep rep;  // the child's representation when it left pending
};

struct PendingEntry {
  int token = 0;  // original sentence position; 0 is ROOT
  SubtreeRep rep;
  std::vector<ChildLink> children;
  std::vector<Tensor> slot_cache;  // scorer first-layer products, one per window slot

  bool is_root() const { return token == 0; }
};

struct HeadAssignment {
  int head = kNoHead;
  std::size_t relation = Vocab::kNoRel;
};

/// Scorer values maintained by the model alongside the state.
struct ScoreCache {
  std::vector<Tensor> pad_left;   // slot products of the left PAD vector
  std::vector<Tensor> pad_right;
  std::vector<Tensor> positions;  // entry i scores the pair (pending[i], pending[i+1])
};

struct ParserState {
  std::vector<PendingEntry> pending;
  std::vector<HeadAssignment> arcs;  // entry i is token i+1
  std::size_t steps = 0;
  ScoreCache cache;

  bool terminal() const { return pending.size() <= 1; }
  std::size_t sentence_length() const { return arcs.size(); }
};

/// Structural initial state: ROOT followed by every token, no arcs yet.
inline ParserState initial_structure(std::size_t n_tokens) {
  ParserState s;
  s.arcs.assign(n_tokens, {});
  for (std::size_t t = 0; t <= n_tokens; ++t) s.pending.push_back(PendingEntry{static_cast<int>(t), {}, {}, {}});
  return s;
}

inline bool is_legal(const ParserState& s, const Action& a) {
  if (s.pending.size() < 2 || a.position + 1 >= s.pending.size()) return false;
  if (a.position == 0) {
    // ROOT never becomes a modifier and takes its single child last.
    return a.kind == ActionKind::attach_left && s.pending.size() == 2;
  }
  return true;
}

/// Every legal (kind, position) pair, position-major, ATTACHLEFT first.
/// Labels are not expanded here.
inline std::vector<Action> legal_actions(const ParserState& s) {
  std::vector<Action> out;
  if (s.terminal()) return out;
  for (std::size_t i = 0; i + 1 < s.pending.size(); ++i) {
    for (ActionKind k : {ActionKind::attach_left, ActionKind::attach_right}) {
      Action a{k, i, 0};
      if (is_legal(s, a)) out.push_back(a);
    }
  }
  return out;
}

inline std::size_t head_position(const Action& a) { return a.kind == ActionKind::attach_left ? a.position : a.position + 1; }
inline std::size_t modifier_position(const Action& a) { return a.kind == ActionKind::attach_left ? a.position + 1 : a.position; }

/// Applies the structural part of an action: records the arc, moves the
/// modifier into its head's children and drops it from pending. Returns the
/// head's new index in pending (always `a.position`).
inline std::size_t attach(ParserState& s, const Action& a, std::size_t relation) {
  if (!is_legal(s, a)) throw std::invalid_argument("illegal action " + to_string(a));
  const std::size_t hp = head_position(a), mp = modifier_position(a);
  PendingEntry& head = s.pending[hp];
  PendingEntry& mod = s.pending[mp];
  s.arcs[static_cast<std::size_t>(mod.token) - 1] = {head.token, relation};
  head.children.push_back({mod.token, relation, std::move(mod.rep)});
  s.pending.erase(s.pending.begin() + static_cast<std::ptrdiff_t>(mp));
  ++s.steps;
  return a.position;
}

/// Gold tree view used by the oracle.
struct GoldTree {
  std::vector<int> heads;               // entry i is the head of token i+1
  std::vector<std::size_t> relations;   // relation ids, same indexing
  std::vector<std::size_t> child_count; // entry t is the number of gold children of token t (0 = ROOT)

  explicit GoldTree(std::vector<int> h, std::vector<std::size_t> rels = {}) : heads(std::move(h)), relations(std::move(rels)) {
    if (relations.empty()) relations.assign(heads.size(), Vocab::kNoRel);
    child_count.assign(heads.size() + 1, 0);
    for (int hd : heads) ++child_count[static_cast<std::size_t>(hd)];
  }
};

/// An action is valid when its arc is a gold arc and the modifier has
/// already collected all of its gold children.
inline bool oracle_valid(const ParserState& s, const Action& a, const GoldTree& gold) {
  if (!is_legal(s, a)) return false;
  const PendingEntry& head = s.pending[head_position(a)];
  const PendingEntry& mod = s.pending[modifier_position(a)];
  if (gold.heads[static_cast<std::size_t>(mod.token) - 1] != head.token) return false;
  return mod.children.size() == gold.child_count[static_cast<std::size_t>(mod.token)];
}

}  // namespace easyfirst
