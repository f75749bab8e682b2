// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails. Thresholds are fixed below.
//
// EASYFIRST_TREEBANK_TRAIN / EASYFIRST_TREEBANK_DEV point the generalization
// check at a real treebank (CoNLL-U); without them it uses the synthetic grammar.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "easyfirst/metrics.hpp"
#include "easyfirst/synthetic.hpp"
#include "easyfirst/trainer.hpp"
#include "fixtures.hpp"

using namespace easyfirst;

namespace {

constexpr double kGradTolerance = 1e-5;
constexpr double kGradEpsilon = 1e-5;
constexpr double kGradSeconds = 60;
constexpr double kStateMachineSeconds = 60;
constexpr double kOverfitUas = 0.99;
constexpr std::size_t kOverfitEpochs = 30;
constexpr double kOverfitSeconds = 300;
constexpr double kGeneralizationMargin = 0.005;
constexpr double kGeneralizationSeconds = 7200;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

ModelConfig small_model(EncoderKind kind, std::size_t dim = 6, double embed_init = 0.5) {
  ModelConfig cfg;
  cfg.word_dim = dim;
  cfg.pos_dim = dim / 2;
  cfg.lstm_dim = dim;
  cfg.tree_dim = dim;
  cfg.mlp_dim = 2 * dim;
  cfg.distance_dim = 3;
  cfg.relation_dim = 3;
  cfg.distance_cap = 5;
  cfg.encoder = kind;
  cfg.embed_init = embed_init;
  return cfg;
}

Expr weighted_sum(Graph& g, const std::vector<Expr>& parts, std::mt19937_64& rng) {
  std::vector<Expr> terms;
  for (Expr e : parts) terms.push_back(matmul(g.constant(uniform_tensor(1, e.rows(), 1.0, rng)), e));
  return g.sum_list(terms, 1);
}

// ---- gradient suite -------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  auto record = [&](const std::string& name, double err) {
    if (err > worst || worst_name.empty()) {
      worst = err;
      worst_name = name;
    }
  };

  for (EncoderKind kind : {EncoderKind::tree_lstm, EncoderKind::rcnn}) {
    std::mt19937_64 rng(11);
    ParameterStore st;
    DistanceBucketer b{4};
    EmbeddingTable dist(st.add("embed.distance", uniform_tensor(b.bucket_count(), 3, 0.5, rng)));
    EmbeddingTable rel(st.add("embed.relation", uniform_tensor(5, 3, 0.5, rng)));
    const SubtreeEncoder enc = SubtreeEncoder::create(st, kind, 4, 5, dist, rel, b, rng);
    std::vector<Tensor> taus, cs;
    for (int k = 0; k < 3; ++k) {
      taus.push_back(uniform_tensor(5, 1, 1.0, rng));
      cs.push_back(uniform_tensor(5, 1, 1.0, rng));
    }
    const Tensor x = uniform_tensor(4, 1, 1.0, rng);
    const std::uint64_t wseed = rng();
    const std::string label = to_string(kind);
    record(label + " gate", gradient_check(
                                [&](Graph& g) {
                                  std::mt19937_64 w(wseed);
                                  return weighted_sum(g, {enc.gate_child(g, g.constant(taus[0]), 3, 1, 2)}, w);
                                },
                                st, kGradEpsilon));
    record(label + " compose", gradient_check(
                                   [&](Graph& g) {
                                     std::vector<ChildInput> ch;
                                     for (int k = 0; k < 3; ++k)
                                       ch.push_back({g.constant(taus[static_cast<std::size_t>(k)]), g.constant(cs[static_cast<std::size_t>(k)]), 3,
                                                     k < 2 ? k + 1 : 5, static_cast<std::size_t>(k + 1)});
                                     const SubtreeExpr out = enc.compose(g, ch, g.constant(x));
                                     std::mt19937_64 w(wseed);
                                     return weighted_sum(g, {out.tau, out.c}, w);
                                   },
                                   st, kGradEpsilon));
  }

  {
    std::mt19937_64 rng(12);
    ParameterStore st;
    const Scorer sc = Scorer::create(st, 4, 6, 2, 3, rng);
    std::vector<Tensor> taus;
    for (std::size_t k = 0; k < sc.slots(); ++k) taus.push_back(uniform_tensor(4, 1, 1.0, rng));
    const std::uint64_t wseed = rng();
    record("scorer", gradient_check(
                         [&](Graph& g) {
                           std::vector<Expr> window;
                           for (std::size_t k = 0; k < taus.size(); ++k)
                             window.push_back(k == 0 ? sc.pad_left(g) : k + 1 == taus.size() ? sc.pad_right(g) : g.constant(taus[k]));
                           std::mt19937_64 w(wseed);
                           return weighted_sum(g, {sc.score(g, window)}, w);
                         },
                         st, kGradEpsilon));
  }

  {
    std::mt19937_64 rng(13);
    ParameterStore st;
    const BiLstmEncoder enc = BiLstmEncoder::create(st, "bilstm", 3, 4, rng);
    std::vector<Tensor> xs;
    for (int k = 0; k < 5; ++k) xs.push_back(uniform_tensor(3, 1, 1.0, rng));
    const std::uint64_t wseed = rng();
    record("sentence encoder", gradient_check(
                                   [&](Graph& g) {
                                     std::vector<Expr> in;
                                     for (const Tensor& t : xs) in.push_back(g.constant(t));
                                     std::mt19937_64 w(wseed);
                                     return weighted_sum(g, enc.encode(g, in), w);
                                   },
                                   st, kGradEpsilon));
  }

  for (EncoderKind kind : {EncoderKind::tree_lstm, EncoderKind::rcnn, EncoderKind::none}) {
    std::mt19937_64 rng(14);
    std::vector<SentenceRecord> sents;
    for (int k = 0; k < 4; ++k) sents.push_back(synthetic::random_sentence(6, rng));
    // Central differences at eps=1e-5 carry ~1e-11 absolute roundoff, so every
    // gradient entry must be well above 1e-6 for a 1e-5 relative check to be
    // meaningful; unit-scale embeddings keep them there.
    Model m = Model::build(small_model(kind, 4, 1.0), sents);
    const ContextualSentence cs = m.encode_values(sents[0]);
    ParserState s = m.init_state(cs);
    const GoldTree gold = gold_tree(m, sents[0]);
    for (int k = 0; k < 2; ++k) m.apply_action(s, cs, margin_pair(m, s, gold).valid);
    const auto acts = legal_actions(s);
    record(to_string(kind) + " step loss", gradient_check(
                                               [&](Graph& g) {
                                                 const auto x = m.encode(g, sents[0]);
                                                 return m.step_loss(g, s, x, acts.back(), acts.front());
                                               },
                                               m.params(), kGradEpsilon));
  }

  const double secs = seconds_since(t0);
  return {worst <= kGradTolerance && secs < kGradSeconds,
          "max_rel_err=" + sci(worst) + " (" + worst_name + ") tol=" + sci(kGradTolerance) + " time=" + num(secs, 1) + "s"};
}

// ---- state machine ----------------------------------------------------------------

Outcome state_machine() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(21);
  std::vector<SentenceRecord> sents;
  for (int i = 0; i < 1000; ++i) sents.push_back(synthetic::random_sentence(1 + i % 12, rng));
  const Model m = Model::build(small_model(EncoderKind::tree_lstm, 16), sents);
  std::size_t bad_count = 0, bad_tree = 0, nonprojective = 0;
  for (const auto& s : sents) {
    const auto res = m.parse(s);
    if (res.actions != s.size()) ++bad_count;  // N - 1 with ROOT counted in N
    const auto heads = heads_of(res.arcs);
    if (!tree_problem(heads).empty()) ++bad_tree;
    else if (!is_projective(heads)) ++nonprojective;
  }
  const double secs = seconds_since(t0);
  return {bad_count == 0 && bad_tree == 0 && nonprojective == 0 && secs < kStateMachineSeconds,
          "sentences=1000 wrong_action_count=" + std::to_string(bad_count) + " malformed=" + std::to_string(bad_tree) +
              " nonprojective=" + std::to_string(nonprojective) + " time=" + num(secs, 1) + "s"};
}

// ---- oracle completeness ------------------------------------------------------------

Outcome oracle_completeness() {
  std::mt19937_64 rng(31);
  std::size_t trajectories = 0, wrong = 0, dead_ends = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + t % 5;
    const GoldTree gold(synthetic::random_projective_heads(n, rng));
    std::function<void(const ParserState&)> explore = [&](const ParserState& s) {
      if (s.terminal()) {
        ++trajectories;
        for (std::size_t i = 0; i < s.arcs.size(); ++i)
          if (s.arcs[i].head != gold.heads[i]) {
            ++wrong;
            break;
          }
        return;
      }
      bool any = false;
      for (const Action& a : legal_actions(s)) {
        if (!oracle_valid(s, a, gold)) continue;
        any = true;
        ParserState next = s;
        attach(next, a, Vocab::kNoRel);
        explore(next);
      }
      if (!any) ++dead_ends;
    };
    explore(initial_structure(static_cast<std::size_t>(n)));
  }
  return {wrong == 0 && dead_ends == 0 && trajectories > 0,
          "trees=200 trajectories=" + std::to_string(trajectories) + " wrong=" + std::to_string(wrong) +
              " dead_ends=" + std::to_string(dead_ends)};
}

// ---- incremental equals recursive ------------------------------------------------------

// Representation of token t recomposed from scratch over the arcs built so far.
SubtreeRep recompose(const Model& m, const ParserState& s, const ContextualSentence& cs, int t) {
  Graph g;
  std::vector<std::vector<int>> kids(s.arcs.size() + 1);
  for (std::size_t u = 1; u <= s.arcs.size(); ++u)
    if (s.arcs[u - 1].head != kNoHead) kids[static_cast<std::size_t>(s.arcs[u - 1].head)].push_back(static_cast<int>(u));
  std::function<SubtreeExpr(int)> build = [&](int h) {
    std::vector<ChildInput> ch;
    for (int c : kids[static_cast<std::size_t>(h)]) {
      const SubtreeExpr sub = build(c);
      ch.push_back({sub.tau, sub.c, h, c, s.arcs[static_cast<std::size_t>(c) - 1].relation});
    }
    return m.subtree_encoder().compose(g, ch, g.constant(cs.x[static_cast<std::size_t>(h)]));
  };
  return build(t).values();
}

Outcome incremental_equals_recursive() {
  std::size_t compared = 0, mismatched = 0;
  for (EncoderKind kind : {EncoderKind::tree_lstm, EncoderKind::rcnn}) {
    std::mt19937_64 rng(41);
    std::vector<SentenceRecord> sents;
    for (int i = 0; i < 100; ++i) sents.push_back(synthetic::random_sentence(2 + i % 11, rng));
    const Model m = Model::build(small_model(kind, 8), sents);
    for (const auto& sent : sents) {
      const GoldTree gold = gold_tree(m, sent);
      const ContextualSentence cs = m.encode_values(sent);
      ParserState s = m.init_state(cs);
      while (!s.terminal()) {
        std::vector<Action> valid;
        for (const Action& a : legal_actions(s))
          if (oracle_valid(s, a, gold)) valid.push_back(a);
        Action a = valid[std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng)];
        a.label = m.label_of_relation(gold.relations[static_cast<std::size_t>(s.pending[modifier_position(a)].token) - 1]);
        m.apply_action(s, cs, a);
        for (const PendingEntry& e : s.pending) {
          const SubtreeRep fresh = recompose(m, s, cs, e.token);
          ++compared;
          if (!(fresh.tau == e.rep.tau) || !(fresh.c == e.rep.c)) ++mismatched;
        }
      }
    }
  }
  return {mismatched == 0, "trajectories=100x2 encoders compared=" + std::to_string(compared) +
                               " mismatched=" + std::to_string(mismatched)};
}

// ---- permutation invariance ------------------------------------------------------------

Outcome permutation_invariance() {
  std::mt19937_64 rng(51);
  std::size_t tree_bad = 0, rcnn_bad = 0;
  ParameterStore st;
  DistanceBucketer b{5};
  EmbeddingTable dist(st.add("embed.distance", uniform_tensor(b.bucket_count(), 3, 0.5, rng)));
  EmbeddingTable rel(st.add("embed.relation", uniform_tensor(6, 3, 0.5, rng)));
  ParameterStore st_r;
  EmbeddingTable dist_r(st_r.add("embed.distance", dist.parameter().value));
  EmbeddingTable rel_r(st_r.add("embed.relation", rel.parameter().value));
  const SubtreeEncoder tree = SubtreeEncoder::create(st, EncoderKind::tree_lstm, 5, 6, dist, rel, b, rng);
  const SubtreeEncoder rcnn = SubtreeEncoder::create(st_r, EncoderKind::rcnn, 5, 6, dist_r, rel_r, b, rng);
  struct Child {
    Tensor tau, c;
    int mod;
    std::size_t rel;
  };
  for (int sample = 0; sample < 1000; ++sample) {
    const int head = 6;
    std::vector<Child> kids(1 + static_cast<std::size_t>(sample % 6));
    for (auto& k : kids) {
      k.tau = uniform_tensor(6, 1, 1.0, rng);
      k.c = uniform_tensor(6, 1, 1.0, rng);
      k.mod = std::uniform_int_distribution<int>(1, 12)(rng);
      k.rel = std::uniform_int_distribution<std::size_t>(0, 5)(rng);
    }
    const Tensor x = uniform_tensor(5, 1, 1.0, rng);
    auto run = [&](const SubtreeEncoder& enc, const std::vector<Child>& order) {
      Graph g;
      std::vector<ChildInput> ch;
      for (const Child& k : order) ch.push_back({g.constant(k.tau), g.constant(k.c), head, k.mod, k.rel});
      return enc.compose(g, ch, g.constant(x)).values();
    };
    auto perm = kids;
    std::shuffle(perm.begin(), perm.end(), rng);
    const SubtreeRep a = run(tree, kids), p = run(tree, perm);
    if (!(a.tau == p.tau) || !(a.h == p.h) || !(a.c == p.c)) ++tree_bad;
    auto dup = kids;
    dup.push_back(kids[std::uniform_int_distribution<std::size_t>(0, kids.size() - 1)(rng)]);
    if (!(run(rcnn, kids).tau == run(rcnn, dup).tau)) ++rcnn_bad;
  }
  return {tree_bad == 0 && rcnn_bad == 0, "samples=1000 tree_lstm_permutation_diffs=" + std::to_string(tree_bad) +
                                               " rcnn_duplicate_diffs=" + std::to_string(rcnn_bad)};
}

// ---- overfitting oracle -----------------------------------------------------------------

ModelConfig overfit_model() {
  ModelConfig cfg;
  cfg.word_dim = 64;
  cfg.pos_dim = 32;
  cfg.lstm_dim = 64;
  cfg.tree_dim = 64;
  cfg.mlp_dim = 128;
  cfg.distance_dim = 8;
  cfg.relation_dim = 8;
  cfg.embed_init = 1.0;
  return cfg;
}

Outcome overfit() {
  const auto t0 = Clock::now();
  synthetic::Grammar grammar(101);
  const auto train = grammar.corpus(50);
  Model m = Model::build(overfit_model(), train);
  TrainConfig tc;
  tc.word_dropout = 0.0;  // memorization: no input noise
  Trainer tr(m, tc);
  double uas = 0.0;
  std::size_t epoch = 0;
  while (epoch < kOverfitEpochs && uas < kOverfitUas) {
    tr.train_epoch(train);
    ++epoch;
    uas = attachment_scores(train, m.parse_all(train)).uas;
  }
  const double secs = seconds_since(t0);
  return {uas >= kOverfitUas && secs < kOverfitSeconds,
          "sentences=50 train_uas=" + num(uas) + " epochs=" + std::to_string(epoch) + " time=" + num(secs, 1) + "s"};
}

// ---- generalization smoke test ---------------------------------------------------------------

ModelConfig generalization_model(EncoderKind kind) {
  ModelConfig cfg;
  cfg.word_dim = 32;
  cfg.pos_dim = 16;
  cfg.lstm_dim = 32;
  cfg.tree_dim = 32;
  cfg.mlp_dim = 64;
  cfg.distance_dim = 8;
  cfg.relation_dim = 8;
  cfg.embed_init = 1.0;
  cfg.encoder = kind;
  return cfg;
}

TrainConfig generalization_training() {
  TrainConfig tc;
  tc.epochs = 15;
  tc.learning_rate = 0.05;
  return tc;
}

Outcome generalization() {
  const auto t0 = Clock::now();
  std::vector<SentenceRecord> train, dev;
  std::string source = "synthetic";
  const char* train_path = std::getenv("EASYFIRST_TREEBANK_TRAIN");
  const char* dev_path = std::getenv("EASYFIRST_TREEBANK_DEV");
  if (train_path && dev_path) {
    train = read_conll_file(train_path);
    dev = read_conll_file(dev_path);
    if (train.size() > 2000) train.resize(2000);
    source = train_path;
  } else {
    synthetic::Grammar grammar(7);
    train = grammar.corpus(2000);
    dev = grammar.corpus(1000);
  }
  auto best_dev = [&](EncoderKind kind) {
    Model m = Model::build(generalization_model(kind), train);
    const TrainConfig tc = generalization_training();
    Trainer tr(m, tc);
    double best = 0.0;
    for (std::size_t e = 0; e < tc.epochs; ++e) {
      tr.train_epoch(train);
      best = std::max(best, attachment_scores(dev, m.parse_all(dev)).uas);
    }
    return best;
  };
  const double tree = best_dev(EncoderKind::tree_lstm);
  const double none = best_dev(EncoderKind::none);
  const double secs = seconds_since(t0);
  return {tree >= none + kGeneralizationMargin && secs < kGeneralizationSeconds,
          "data=" + source + " train=" + std::to_string(train.size()) + " dev=" + std::to_string(dev.size()) +
              " tree_lstm_uas=" + num(tree) + " bilstm_only_uas=" + num(none) + " gap=" + num(tree - none) +
              " required=" + num(kGeneralizationMargin) + " time=" + num(secs, 0) + "s"};
}

// ---- metric fixtures -----------------------------------------------------------------------

Outcome metric_fixtures() {
  struct Expected {
    double uas, las;
  };
  const Expected want[] = {{1.0, 1.0}, {1.0, 0.75}, {1.0, 0.0}, {0.75, 0.5}, {7.0 / 9.0, 6.0 / 9.0}};
  std::size_t ok = 0;
  const auto& all = fixtures::attachment();
  for (std::size_t i = 0; i < all.size(); ++i) {
    const EvalReport r = attachment_scores(fixtures::gold(all[i]), fixtures::predicted(all[i]));
    if (r.uas == want[i].uas && r.las == want[i].las && r.counted == all[i].counted && r.excluded == all[i].excluded) ++ok;
  }
  const auto& seven = fixtures::profile_seven();
  const ErrorProfile p7 = error_profile(fixtures::gold(seven), fixtures::predicted(seven));
  const bool seven_ok = p7.length_bins == std::vector<RateCell>{{"1-5", 0, 0}, {"6-10", 1, 7}} &&
                        p7.pos_groups == std::vector<RateCell>{{"noun", 1, 3},      {"verb", 0, 0},   {"pronoun", 0, 0},
                                                               {"adjective", 0, 1}, {"adverb", 0, 1}, {"conjunction", 0, 0}};
  const ErrorProfile p2 = error_profile(fixtures::gold(all[4]), fixtures::predicted(all[4]));
  const bool two_ok = p2.length_bins == std::vector<RateCell>{{"1-5", 1, 4}, {"6-10", 1, 5}} &&
                      p2.pos_groups == std::vector<RateCell>{{"noun", 0, 3},      {"verb", 0, 2},   {"pronoun", 0, 2},
                                                             {"adjective", 0, 0}, {"adverb", 0, 0}, {"conjunction", 2, 2}};
  return {ok == 5 && seven_ok && two_ok, "attachment_fixtures=" + std::to_string(ok) + "/5 profiles=" +
                                             std::to_string(int(seven_ok) + int(two_ok)) + "/2"};
}

// ---- determinism ------------------------------------------------------------------------------

struct RunArtifacts {
  std::string checkpoint, parses, report, profile;
};

RunArtifacts full_run() {
  synthetic::Grammar grammar(61);
  const auto train = grammar.corpus(60);
  const auto dev = grammar.corpus(20);
  Model m = Model::build(small_model(EncoderKind::tree_lstm, 12), train);
  Trainer tr(m, TrainConfig{});
  for (int e = 0; e < 3; ++e) tr.train_epoch(train);
  RunArtifacts out;
  std::ostringstream ckpt;
  save_checkpoint(ckpt, m.params(), m.metadata());
  out.checkpoint = ckpt.str();
  const auto pred = m.parse_all(dev);
  out.parses = write_conll_string(dev, pred);
  out.report = report_json(attachment_scores(dev, pred)).dump();
  out.profile = profile_csv(error_profile(dev, pred));
  return out;
}

Outcome determinism() {
  const RunArtifacts a = full_run(), b = full_run();
  const bool same = a.checkpoint == b.checkpoint && a.parses == b.parses && a.report == b.report && a.profile == b.profile;
  return {same, "checkpoint_bytes=" + std::to_string(a.checkpoint.size()) + " checkpoints_equal=" +
                    std::to_string(a.checkpoint == b.checkpoint) + " parses_equal=" + std::to_string(a.parses == b.parses) +
                    " reports_equal=" + std::to_string(a.report == b.report && a.profile == b.profile)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient-suite", gradient_suite},
      {"state-machine", state_machine},
      {"oracle-completeness", oracle_completeness},
      {"incremental-equals-recursive", incremental_equals_recursive},
      {"permutation-invariance", permutation_invariance},
      {"overfitting-oracle", overfit},
      {"generalization", generalization},
      {"metric-fixtures", metric_fixtures},
      {"determinism", determinism},
  };
  // Optional arguments select criteria by name.
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << "  " << o.detail << std::endl;
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
