#pragma once

// Margin training against the dynamic validity oracle.
//
// Each decision compares the best-scoring valid action with the best-scoring
// invalid one and takes the hinge max(0, 1 - s_valid + s_invalid). The parser
// then follows the best valid action. Gradients from all decisions of a
// sentence are accumulated (the sentence encoder is back-propagated once per
// sentence) and one clipped SGD step is taken per sentence.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "easyfirst/model.hpp"

namespace easyfirst {

struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.1;
  double clip = 5.0;
  std::uint64_t seed = 1;
  double word_dropout = 0.25;
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs}, {"learning_rate", c.learning_rate}, {"clip", c.clip}, {"seed", c.seed}, {"word_dropout", c.word_dropout}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (j.contains("epochs")) j.at("epochs").get_to(c.epochs);
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
  if (j.contains("clip")) j.at("clip").get_to(c.clip);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("word_dropout")) j.at("word_dropout").get_to(c.word_dropout);
}

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  std::size_t sentences = 0;
  std::size_t decisions = 0;
  std::size_t violations = 0;    // decisions with positive loss
  std::size_t skipped = 0;       // non-projective or unannotated sentences
};

/// Best valid and best invalid action of one decision, labels expanded.
struct MarginPair {
  Action valid;
  Action invalid;
  double valid_score = -std::numeric_limits<double>::infinity();
  double invalid_score = -std::numeric_limits<double>::infinity();
  bool has_valid = false;
  bool has_invalid = false;

  double loss() const { return has_valid && has_invalid ? std::max(0.0, 1.0 - valid_score + invalid_score) : 0.0; }
};

inline GoldTree gold_tree(const Model& m, const SentenceRecord& s) {
  std::vector<int> heads;
  std::vector<std::size_t> rels;
  for (const Token& t : s.tokens) {
    heads.push_back(t.head);
    rels.push_back(m.gold_relation(t));
  }
  return GoldTree(std::move(heads), std::move(rels));
}

/// Scans every legal labeled action; ties keep the first in the parser's
/// tie-break order.
inline MarginPair margin_pair(const Model& m, const ParserState& s, const GoldTree& gold) {
  MarginPair mp;
  for (const Action& a : legal_actions(s)) {
    const bool structural = oracle_valid(s, a, gold);
    const std::size_t mod_token = static_cast<std::size_t>(s.pending[modifier_position(a)].token);
    for (std::size_t l = 0; l < m.labels(); ++l) {
      const Action cand{a.kind, a.position, l};
      const double v = m.action_score(s, cand);
      const bool valid = structural && (!m.config().labeled || m.relation_of_label(l) == gold.relations[mod_token - 1]);
      if (valid) {
        if (!mp.has_valid || v > mp.valid_score) {
          mp.valid = cand;
          mp.valid_score = v;
          mp.has_valid = true;
        }
      } else if (!mp.has_invalid || v > mp.invalid_score) {
        mp.invalid = cand;
        mp.invalid_score = v;
        mp.has_invalid = true;
      }
    }
  }
  return mp;
}

class Trainer {
 public:
  Trainer(Model& model, TrainConfig cfg) : model_(model), cfg_(cfg), rng_(cfg.seed), sgd_{cfg.learning_rate, cfg.clip} {}

  const TrainConfig& config() const { return cfg_; }

  /// Whether `s` can be trained on: annotated, projective, and (labeled
  /// mode) every relation known to the model.
  bool trainable(const SentenceRecord& s) const {
    if (s.tokens.empty() || !s.has_gold()) return false;
    std::vector<int> heads;
    for (const Token& t : s.tokens) {
      heads.push_back(t.head);
      if (model_.config().labeled && model_.label_of_relation(model_.relations().id(t.rel)) == Model::kNoLabel) return false;
    }
    return is_projective(heads);
  }

  /// Accumulates gradients for one sentence without updating parameters.
  /// Returns the summed hinge loss; `decisions`/`violations` are incremented.
  double accumulate_sentence(const SentenceRecord& s, const std::vector<std::vector<double>>* external,
                             std::size_t* decisions = nullptr, std::size_t* violations = nullptr) {
    const GoldTree gold = gold_tree(model_, s);
    Graph sentence_graph;
    const std::vector<Expr> x_expr = model_.encode(sentence_graph, s, external, &rng_, cfg_.word_dropout);
    ContextualSentence cs;
    for (Expr e : x_expr) cs.x.push_back(e.value());

    std::vector<Tensor> x_grad(cs.x.size());
    bool any_grad = false;
    double total = 0.0;
    ParserState state = model_.init_state(cs);
    while (!state.terminal()) {
      const MarginPair mp = margin_pair(model_, state, gold);
      if (!mp.has_valid)
        throw OracleError("no valid action in a reachable state (sentence of " + std::to_string(s.size()) + " tokens)");
      if (decisions) ++*decisions;
      const double loss = mp.loss();
      if (loss > 0) {
        if (violations) ++*violations;
        total += loss;
        Graph step;
        std::vector<Expr> x_leaf;
        x_leaf.reserve(cs.x.size());
        for (const Tensor& t : cs.x) x_leaf.push_back(step.constant(t));
        Expr l = model_.step_loss(step, state, x_leaf, mp.valid, mp.invalid);
        step.backward(l);
        for (std::size_t j = 0; j < x_leaf.size(); ++j) {
          const Tensor& g = step.grad(x_leaf[j]);
          if (g.empty()) continue;
          if (x_grad[j].empty()) x_grad[j] = Tensor(g.rows, g.cols);
          kernels::add_into(x_grad[j].span(), g.span());
          any_grad = true;
        }
      }
      model_.apply_action(state, cs, mp.valid);
    }
    if (any_grad) {
      std::vector<std::pair<Expr, Tensor>> seeds;
      for (std::size_t j = 0; j < x_expr.size(); ++j)
        if (!x_grad[j].empty()) seeds.emplace_back(x_expr[j], std::move(x_grad[j]));
      sentence_graph.backward(seeds);
    }
    return total;
  }

  EpochStats train_epoch(const std::vector<SentenceRecord>& corpus, const ExternalContext* ctx = nullptr) {
    EpochStats st;
    st.epoch = ++epoch_;
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    model_.params().zero_grad();
    for (std::size_t idx : order) {
      const SentenceRecord& s = corpus[idx];
      if (!trainable(s)) {
        ++st.skipped;
        continue;
      }
      const auto* ext = ctx && ctx->enabled() ? &ctx->vectors.at(idx) : nullptr;
      st.loss += accumulate_sentence(s, ext, &st.decisions, &st.violations);
      ++st.sentences;
      sgd_.step(model_.params());
    }
    return st;
  }

 private:
  Model& model_;
  TrainConfig cfg_;
  std::mt19937_64 rng_;
  Sgd sgd_;
  std::size_t epoch_ = 0;
};

}  // namespace easyfirst
