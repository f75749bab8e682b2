#pragma once

// The easy-first parser model: embeddings, sentence encoder, subtree
// encoder and action scorer over one ParameterStore, plus greedy parsing.

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "easyfirst/autodiff.hpp"
#include "easyfirst/checkpoint.hpp"
#include "easyfirst/embedding.hpp"
#include "easyfirst/parser_state.hpp"
#include "easyfirst/scorer.hpp"
#include "easyfirst/sentence_encoder.hpp"
#include "easyfirst/subtree_encoder.hpp"
#include "easyfirst/treebank.hpp"

namespace easyfirst {

struct ModelConfig {
  std::size_t word_dim = 100;
  std::size_t pos_dim = 25;
  std::size_t distance_dim = 25;
  std::size_t relation_dim = 25;
  std::size_t lstm_dim = 128;  // per direction
  bool use_bilstm = true;
  std::size_t tree_dim = 128;
  std::size_t mlp_dim = 256;
  std::size_t window = 2;
  EncoderKind encoder = EncoderKind::tree_lstm;
  int distance_cap = 10;
  bool labeled = true;
  double embed_init = 0.01;
  std::size_t external_dim = 0;
  std::uint64_t seed = 1;

  std::size_t input_dim() const { return word_dim + pos_dim + external_dim; }
  std::size_t token_dim() const { return use_bilstm ? 2 * lstm_dim : input_dim(); }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"word_dim", c.word_dim},         {"pos_dim", c.pos_dim},       {"distance_dim", c.distance_dim},
       {"relation_dim", c.relation_dim}, {"lstm_dim", c.lstm_dim},     {"use_bilstm", c.use_bilstm},
       {"tree_dim", c.tree_dim},         {"mlp_dim", c.mlp_dim},       {"window", c.window},
       {"encoder", to_string(c.encoder)}, {"distance_cap", c.distance_cap}, {"labeled", c.labeled},
       {"embed_init", c.embed_init},     {"external_dim", c.external_dim}, {"seed", c.seed}};
}

/// Missing keys keep their current values.
inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  take("word_dim", c.word_dim);
  take("pos_dim", c.pos_dim);
  take("distance_dim", c.distance_dim);
  take("relation_dim", c.relation_dim);
  take("lstm_dim", c.lstm_dim);
  take("use_bilstm", c.use_bilstm);
  take("tree_dim", c.tree_dim);
  take("mlp_dim", c.mlp_dim);
  take("window", c.window);
  if (j.contains("encoder")) c.encoder = parse_encoder_kind(j.at("encoder").get<std::string>());
  take("distance_cap", c.distance_cap);
  take("labeled", c.labeled);
  take("embed_init", c.embed_init);
  take("external_dim", c.external_dim);
  take("seed", c.seed);
}

/// Per-token contextual vectors; index 0 is ROOT.
struct ContextualSentence {
  std::vector<Tensor> x;
};

class Model {
 public:
  static constexpr std::size_t kNoLabel = std::numeric_limits<std::size_t>::max();

  Model(ModelConfig cfg, Vocab words, Vocab tags, Vocab relations)
      : cfg_(cfg), words_(std::move(words)), tags_(std::move(tags)), rels_(std::move(relations)) {
    store_ = std::make_unique<ParameterStore>();
    std::mt19937_64 rng(cfg_.seed);
    auto& st = *store_;
    word_ = EmbeddingTable(st.add("embed.word", uniform_tensor(words_.size(), cfg_.word_dim, cfg_.embed_init, rng)));
    tag_ = EmbeddingTable(st.add("embed.pos", uniform_tensor(tags_.size(), cfg_.pos_dim, cfg_.embed_init, rng)));
    if (cfg_.use_bilstm) bilstm_ = BiLstmEncoder::create(st, "bilstm", cfg_.input_dim(), cfg_.lstm_dim, rng);
    const DistanceBucketer bucketer{cfg_.distance_cap};
    if (cfg_.encoder != EncoderKind::none) {
      distance_ = EmbeddingTable(
          st.add("embed.distance", uniform_tensor(bucketer.bucket_count(), cfg_.distance_dim, cfg_.embed_init, rng)));
      relation_ = EmbeddingTable(
          st.add("embed.relation", uniform_tensor(rels_.size(), cfg_.relation_dim, cfg_.embed_init, rng)));
    }
    subtree_ = SubtreeEncoder::create(st, cfg_.encoder, cfg_.token_dim(), cfg_.tree_dim, distance_, relation_, bucketer, rng);
    scorer_ = Scorer::create(st, subtree_.dim(), cfg_.mlp_dim, cfg_.window, labels(), rng);
  }

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  /// Fresh model with vocabularies collected from `train`.
  static Model build(const ModelConfig& cfg, const std::vector<SentenceRecord>& train) {
    Vocab words = Vocab::words(), tags = Vocab::words(), rels = Vocab::relations();
    for (const SentenceRecord& s : train) {
      for (const Token& t : s.tokens) {
        words.add(t.form);
        tags.add(t.pos);
        if (!t.rel.empty()) rels.add(t.rel);
      }
    }
    return Model(cfg, std::move(words), std::move(tags), std::move(rels));
  }

  // ---- persistence -------------------------------------------------------

  std::string metadata() const {
    nlohmann::json meta = {{"format", "easyfirst-model"},
                           {"config", cfg_},
                           {"words", words_.to_json()},
                           {"tags", tags_.to_json()},
                           {"relations", rels_.to_json()}};
    return meta.dump();
  }

  void save(const std::string& path) const { save_checkpoint_file(path, *store_, metadata()); }

  static Model from_checkpoint(const CheckpointContents& c) {
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(c.metadata);
    } catch (const std::exception& e) {
      throw CheckpointError(std::string("checkpoint: unreadable metadata: ") + e.what());
    }
    if (meta.value("format", "") != "easyfirst-model") throw CheckpointError("checkpoint: not an easyfirst model");
    ModelConfig cfg;
    from_json(meta.at("config"), cfg);
    Model m(cfg, Vocab::from_json(meta.at("words")), Vocab::from_json(meta.at("tags")),
            Vocab::from_json(meta.at("relations")));
    restore_parameters(c, *m.store_);
    return m;
  }

  static Model load(const std::string& path) { return from_checkpoint(read_checkpoint_file(path)); }

  // ---- accessors -----------------------------------------------------------

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& params() { return *store_; }
  const ParameterStore& params() const { return *store_; }
  const Vocab& words() const { return words_; }
  const Vocab& tags() const { return tags_; }
  const Vocab& relations() const { return rels_; }
  const SubtreeEncoder& subtree_encoder() const { return subtree_; }
  const Scorer& scorer() const { return scorer_; }
  const BiLstmEncoder& bilstm() const { return bilstm_; }
  EmbeddingTable word_table() const { return word_; }
  EmbeddingTable tag_table() const { return tag_; }
  EmbeddingTable distance_table() const { return distance_; }
  EmbeddingTable relation_table() const { return relation_; }

  /// Size of the label space: real relations when labeled, else one (NO-REL).
  std::size_t labels() const { return cfg_.labeled ? std::max<std::size_t>(rels_.size() - rels_.special_count(), 1) : 1; }

  std::size_t relation_of_label(std::size_t label) const {
    if (!cfg_.labeled) return Vocab::kNoRel;
    const std::size_t r = label + rels_.special_count();
    return r < rels_.size() ? r : Vocab::kUnkRel;
  }

  std::size_t label_of_relation(std::size_t relation) const {
    if (!cfg_.labeled) return 0;
    if (relation < rels_.special_count() || relation >= rels_.size()) return kNoLabel;
    return relation - rels_.special_count();
  }

  /// Relation id used for the gold arc features of a token.
  std::size_t gold_relation(const Token& t) const { return cfg_.labeled ? rels_.id(t.rel) : Vocab::kNoRel; }

  // ---- sentence encoding ---------------------------------------------------

  /// Contextual vectors for ROOT + tokens. With `dropout_rng`, words are
  /// replaced by UNK with the frequency-dependent word-dropout probability.
  std::vector<Expr> encode(Graph& g, const SentenceRecord& s, const std::vector<std::vector<double>>* external = nullptr,
                           std::mt19937_64* dropout_rng = nullptr, double dropout_alpha = 0.0) const {
    if (s.tokens.empty()) throw std::invalid_argument("sentence encoder: empty sentence");
    if (cfg_.external_dim && !external)
      throw EmbeddingError("model expects external context vectors of width " + std::to_string(cfg_.external_dim));
    if (!cfg_.external_dim && external && !external->empty() && !external->front().empty())
      throw EmbeddingError("model was built without external context vectors");
    std::vector<Expr> inputs;
    inputs.reserve(s.size() + 1);
    for (std::size_t j = 0; j <= s.size(); ++j) {
      std::size_t w = Vocab::kRoot, t = Vocab::kRoot;
      if (j > 0) {
        const Token& tok = s.tokens[j - 1];
        w = words_.id(tok.form);
        t = tags_.id(tok.pos);
        if (dropout_rng && w != Vocab::kUnk && drop_to_unk(words_.freq(w), dropout_alpha, *dropout_rng)) w = Vocab::kUnk;
      }
      std::vector<Expr> parts{word_.lookup(g, w), tag_.lookup(g, t)};
      if (cfg_.external_dim) {
        Tensor ext(cfg_.external_dim, 1);
        if (j > 0) {
          const auto& v = (*external).at(j - 1);
          if (v.size() != cfg_.external_dim)
            throw EmbeddingError("external context width " + std::to_string(v.size()) + ", model expects " +
                                 std::to_string(cfg_.external_dim));
          ext = Tensor::column(v);
        }
        parts.push_back(g.constant(std::move(ext)));
      }
      inputs.push_back(g.concat(parts));
    }
    return cfg_.use_bilstm ? bilstm_.encode(g, inputs) : inputs;
  }

  ContextualSentence encode_values(const SentenceRecord& s, const std::vector<std::vector<double>>* external = nullptr) const {
    Graph g;
    ContextualSentence cs;
    for (Expr e : encode(g, s, external)) cs.x.push_back(e.value());
    return cs;
  }

  // ---- subtree representations ---------------------------------------------

  /// Composition of `entry` from its stored children, with `x` as the head input.
  SubtreeExpr compose_entry(Graph& g, const PendingEntry& entry, Expr x) const {
    std::vector<ChildInput> children;
    children.reserve(entry.children.size());
    for (const ChildLink& ch : entry.children)
      children.push_back({g.constant(ch.rep.tau), g.constant(ch.rep.c), entry.token, ch.token, ch.relation});
    return subtree_.compose(g, children, x);
  }

  SubtreeRep compose_entry_values(const PendingEntry& entry, const ContextualSentence& cs) const {
    Graph g;
    return compose_entry(g, entry, g.constant(cs.x.at(static_cast<std::size_t>(entry.token)))).values();
  }

  // ---- transition system -----------------------------------------------------

  /// ROOT plus one leaf per token, each represented by composing no children.
  ParserState init_state(const ContextualSentence& cs) const {
    if (cs.x.size() < 2) throw std::invalid_argument("init_state: empty sentence");
    ParserState s = initial_structure(cs.x.size() - 1);
    for (PendingEntry& e : s.pending) {
      e.rep = compose_entry_values(e, cs);
      e.slot_cache = scorer_.slot_products(e.rep.tau);
    }
    s.cache.pad_left = scorer_.slot_products(scorer_.pad_left());
    s.cache.pad_right = scorer_.slot_products(scorer_.pad_right());
    for (std::size_t i = 0; i + 1 < s.pending.size(); ++i) s.cache.positions.push_back(score_position(s, i));
    return s;
  }

  /// Scores of one position (both kinds, every label).
  Tensor score_position(const ParserState& s, std::size_t position) const {
    std::vector<const Tensor*> per_slot(scorer_.slots());
    const long m = static_cast<long>(s.pending.size());
    for (std::size_t k = 0; k < scorer_.slots(); ++k) {
      const long j = scorer_.slot_index(position, k);
      per_slot[k] = j < 0    ? &s.cache.pad_left[k]
                    : j >= m ? &s.cache.pad_right[k]
                             : &s.pending[static_cast<std::size_t>(j)].slot_cache[k];
    }
    return scorer_.score_from_slots(per_slot);
  }

  /// Cached scores, one Tensor per position (entry i scores the pair at i).
  const std::vector<Tensor>& scores(const ParserState& s) const { return s.cache.positions; }

  double action_score(const ParserState& s, const Action& a) const {
    return scores(s)[a.position][static_cast<std::size_t>(a.kind) * labels() + a.label];
  }

  /// Applies a legal action, recomposes the head and refreshes cached scores.
  void apply_action(ParserState& s, const ContextualSentence& cs, const Action& a) const {
    const std::size_t relation = relation_of_label(a.label);
    const std::size_t hp = attach(s, a, relation);
    PendingEntry& head = s.pending[hp];
    head.rep = compose_entry_values(head, cs);
    head.slot_cache = scorer_.slot_products(head.rep.tau);
    // Positions whose window lies wholly left of the head keep their scores,
    // those wholly right of it shift down by one, the rest are recomputed.
    auto& sc = s.cache.positions;
    const long w = static_cast<long>(scorer_.window());
    const long i = static_cast<long>(hp);
    const long positions = static_cast<long>(s.pending.size()) - 1;
    std::vector<Tensor> next(static_cast<std::size_t>(std::max(positions, 0L)));
    for (long p = 0; p < positions; ++p) {
      if (p + w + 1 < i) next[static_cast<std::size_t>(p)] = std::move(sc[static_cast<std::size_t>(p)]);
      else if (p - w > i) next[static_cast<std::size_t>(p)] = std::move(sc[static_cast<std::size_t>(p + 1)]);
      else next[static_cast<std::size_t>(p)] = score_position(s, static_cast<std::size_t>(p));
    }
    sc = std::move(next);
  }

  /// Highest-scoring legal action; ties go to the lowest position, then
  /// ATTACHLEFT, then the lowest label.
  Action best_action(const ParserState& s) const {
    Action best;
    double best_score = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (const Action& a : legal_actions(s)) {
      for (std::size_t l = 0; l < labels(); ++l) {
        Action cand{a.kind, a.position, l};
        const double v = action_score(s, cand);
        if (!found || v > best_score) {
          best = cand;
          best_score = v;
          found = true;
        }
      }
    }
    if (!found) throw std::logic_error("best_action: terminal state");
    return best;
  }

  ArcList arcs_of(const ParserState& s) const {
    ArcList out;
    out.reserve(s.arcs.size());
    for (const HeadAssignment& h : s.arcs)
      out.push_back({h.head, cfg_.labeled && h.relation >= rels_.special_count() ? rels_.symbol(h.relation) : std::string()});
    return out;
  }

  struct ParseResult {
    ArcList arcs;
    std::size_t actions = 0;
  };

  ParseResult parse(const SentenceRecord& sentence, const std::vector<std::vector<double>>* external = nullptr) const {
    const ContextualSentence cs = encode_values(sentence, external);
    ParserState s = init_state(cs);
    while (!s.terminal()) apply_action(s, cs, best_action(s));
    return {arcs_of(s), s.steps};
  }

  std::vector<ArcList> parse_all(const std::vector<SentenceRecord>& corpus, const ExternalContext* ctx = nullptr) const {
    std::vector<ArcList> out;
    out.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus[i].tokens.empty()) {
        out.emplace_back();
        continue;
      }
      out.push_back(parse(corpus[i], ctx && ctx->enabled() ? &ctx->vectors.at(i) : nullptr).arcs);
    }
    return out;
  }

  // ---- training loss -----------------------------------------------------------

  /// Hinge loss max(0, 1 - score(good) + score(bad)) for one decision.
  /// Pending entries in the scoring windows are recomposed in the graph from
  /// their stored children (held constant) and the given head inputs `x`, so
  /// gradients reach the scorer, the composer and x, but not earlier steps.
  Expr step_loss(Graph& g, const ParserState& s, const std::vector<Expr>& x, const Action& good, const Action& bad) const {
    std::map<long, Expr> taus;
    const long m = static_cast<long>(s.pending.size());
    auto tau_at = [&](long j) -> Expr {
      if (j < 0) return scorer_.pad_left(g);
      if (j >= m) return scorer_.pad_right(g);
      auto it = taus.find(j);
      if (it != taus.end()) return it->second;
      const PendingEntry& e = s.pending[static_cast<std::size_t>(j)];
      Expr t = compose_entry(g, e, x.at(static_cast<std::size_t>(e.token))).tau;
      taus.emplace(j, t);
      return t;
    };
    std::map<std::size_t, Expr> scored;
    auto score_at = [&](std::size_t position) {
      auto it = scored.find(position);
      if (it != scored.end()) return it->second;
      std::vector<Expr> window;
      for (std::size_t k = 0; k < scorer_.slots(); ++k) window.push_back(tau_at(scorer_.slot_index(position, k)));
      Expr out = scorer_.score(g, window);
      scored.emplace(position, out);
      return out;
    };
    auto index = [&](const Action& a) { return static_cast<std::size_t>(a.kind) * labels() + a.label; };
    Expr sg = pick(score_at(good.position), index(good));
    Expr sb = pick(score_at(bad.position), index(bad));
    return relu(g.constant(Tensor(1, 1, 1.0)) - sg + sb);
  }

 private:
  ModelConfig cfg_;
  Vocab words_;
  Vocab tags_;
  Vocab rels_;
  std::unique_ptr<ParameterStore> store_;
  EmbeddingTable word_, tag_, distance_, relation_;
  BiLstmEncoder bilstm_;
  SubtreeEncoder subtree_;
  Scorer scorer_;
};

}  // namespace easyfirst
