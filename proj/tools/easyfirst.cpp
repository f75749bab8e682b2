// easyfirst: train, parse, eval, analyze, synth.
//
// Results go to stdout, logs to stderr. Exit codes: 0 success, 1 usage,
// 2 data, 3 config/checkpoint mismatch.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "easyfirst/metrics.hpp"
#include "easyfirst/synthetic.hpp"
#include "easyfirst/trainer.hpp"

using namespace easyfirst;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kMismatch = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One JSON document with optional "model", "train", "eval" and "paths" sections.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  nlohmann::json model_json = nlohmann::json::object();  // keys the config file set explicitly
  std::map<std::string, std::string> paths;
};

RunConfig load_config(const std::string& path) {
  RunConfig rc;
  if (path.empty()) return rc;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.contains("model")) {
      rc.model_json = j.at("model");
      from_json(rc.model_json, rc.model);
    }
    if (j.contains("train")) from_json(j.at("train"), rc.train);
    if (j.contains("eval")) from_json(j.at("eval"), rc.eval);
    if (j.contains("paths"))
      for (const auto& [k, v] : j.at("paths").items()) rc.paths[k] = v.get<std::string>();
  } catch (const std::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  return rc;
}

std::string require_path(const std::string& flag, const RunConfig& rc, const std::string& key, bool required = true) {
  std::string p = flag;
  if (p.empty()) {
    auto it = rc.paths.find(key);
    if (it != rc.paths.end()) p = it->second;
  }
  if (p.empty() && required) throw UsageError("missing path: " + key);
  return p;
}

std::vector<SentenceRecord> read_treebank(const std::string& path, bool check_trees = true) {
  if (path == "-") return read_conll(std::cin, check_trees);
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_conll(in, check_trees);
}

std::vector<ArcList> arcs_of_all(const std::vector<SentenceRecord>& recs) {
  std::vector<ArcList> out;
  for (const auto& r : recs) out.push_back(gold_arcs(r));
  return out;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---- train ---------------------------------------------------------------------

struct TrainArgs {
  std::string config, train, dev, model, pretrained, train_context, dev_context;
  std::optional<std::size_t> epochs, word_dim, pos_dim, lstm_dim, tree_dim, mlp_dim, window;
  std::optional<double> lr, clip, word_dropout;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> encoder;
  bool unlabeled = false;
  bool no_bilstm = false;
};

int cmd_train(const TrainArgs& a) {
  RunConfig rc = load_config(a.config);
  ModelConfig& mc = rc.model;
  TrainConfig& tc = rc.train;
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.lr) tc.learning_rate = *a.lr;
  if (a.clip) tc.clip = *a.clip;
  if (a.word_dropout) tc.word_dropout = *a.word_dropout;
  if (a.seed) tc.seed = mc.seed = *a.seed;
  if (a.word_dim) mc.word_dim = *a.word_dim;
  if (a.pos_dim) mc.pos_dim = *a.pos_dim;
  if (a.lstm_dim) mc.lstm_dim = *a.lstm_dim;
  if (a.tree_dim) mc.tree_dim = *a.tree_dim;
  if (a.mlp_dim) mc.mlp_dim = *a.mlp_dim;
  if (a.window) mc.window = *a.window;
  if (a.encoder) {
    try {
      mc.encoder = parse_encoder_kind(*a.encoder);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  if (a.unlabeled) mc.labeled = false;
  if (a.no_bilstm) mc.use_bilstm = false;

  const std::string train_path = require_path(a.train, rc, "train");
  const std::string dev_path = require_path(a.dev, rc, "dev", false);
  const std::string model_path = require_path(a.model, rc, "model");
  const std::string pre_path = require_path(a.pretrained, rc, "pretrained", false);
  const std::string train_ctx_path = require_path(a.train_context, rc, "train_context", false);
  const std::string dev_ctx_path = require_path(a.dev_context, rc, "dev_context", false);
  // Every referenced path is checked before any work starts.
  for (const std::string& p : {train_path, dev_path, pre_path, train_ctx_path, dev_ctx_path})
    if (!p.empty() && !std::ifstream(p)) throw DataError("cannot open " + p);

  const auto train = read_treebank(train_path);
  const auto dev = dev_path.empty() ? std::vector<SentenceRecord>{} : read_treebank(dev_path);
  ExternalContext train_ctx, dev_ctx;
  if (!train_ctx_path.empty()) {
    train_ctx = load_external_context_file(train_ctx_path, train);
    mc.external_dim = train_ctx.width;
    if (!dev.empty()) {
      if (dev_ctx_path.empty()) throw UsageError("external context for training needs a matching dev context");
      dev_ctx = load_external_context_file(dev_ctx_path, dev);
      if (dev_ctx.width != train_ctx.width)
        throw DataError("dev context width " + std::to_string(dev_ctx.width) + ", train context width " +
                        std::to_string(train_ctx.width));
    }
  }

  Model model = Model::build(mc, train);
  if (!pre_path.empty()) {
    std::ifstream in(pre_path);
    const PretrainedReport rep = load_pretrained(in, model.words(), model.params().get("embed.word"));
    std::cerr << "pretrained coverage=" << fixed(rep.coverage()) << " matched=" << rep.matched << "\n";
  }
  std::cerr << "sentences train=" << train.size() << " dev=" << dev.size() << " labels=" << model.labels()
            << " parameters=" << model.params().size() << "\n";

  Trainer trainer(model, tc);
  double best = -1.0;
  std::size_t best_epoch = 0;
  for (std::size_t e = 1; e <= tc.epochs; ++e) {
    const EpochStats st = trainer.train_epoch(train, train_ctx.enabled() ? &train_ctx : nullptr);
    std::cerr << "epoch=" << e << " loss=" << fixed(st.loss) << " violations=" << st.violations << "/" << st.decisions
              << " skipped=" << st.skipped;
    if (dev.empty()) {
      std::cerr << "\n";
      continue;
    }
    const EvalReport r = attachment_scores(dev, model.parse_all(dev, dev_ctx.enabled() ? &dev_ctx : nullptr), rc.eval);
    std::cerr << " dev-UAS=" << fixed(r.uas) << " dev-LAS=" << fixed(r.las) << "\n";
    if (r.uas > best) {
      best = r.uas;
      best_epoch = e;
      model.save(model_path);
    }
  }
  if (dev.empty()) model.save(model_path);
  else std::cerr << "best epoch=" << best_epoch << " dev-UAS=" << fixed(best) << "\n";
  return kOk;
}

// ---- parse ---------------------------------------------------------------------

// Every dimension the config file names must match the checkpoint.
void check_against_checkpoint(const RunConfig& rc, const Model& m) {
  const nlohmann::json have = m.config();
  for (const auto& [key, want] : rc.model_json.items()) {
    if (key == "seed" || !have.contains(key)) continue;
    if (have.at(key) != want)
      throw MismatchError("config " + key + "=" + want.dump() + " but checkpoint " + key + "=" + have.at(key).dump());
  }
}

int cmd_parse(const std::string& config, const std::string& model_flag, const std::string& input,
              const std::string& output, const std::string& context) {
  const RunConfig rc = load_config(config);
  const std::string model_path = require_path(model_flag, rc, "model");
  const std::string in_path = input.empty() ? "-" : input;
  if (in_path != "-" && !std::ifstream(in_path)) throw DataError("cannot open " + in_path);
  Model model = [&] {
    try {
      return Model::load(model_path);
    } catch (const CheckpointError& e) {
      if (!std::ifstream(model_path)) throw DataError(e.what());
      throw MismatchError(e.what());
    }
  }();
  check_against_checkpoint(rc, model);
  const auto recs = read_treebank(in_path);
  ExternalContext ctx;
  if (!context.empty()) ctx = load_external_context_file(context, recs);
  if (ctx.width != model.config().external_dim)
    throw MismatchError("context width " + std::to_string(ctx.width) + " but checkpoint external_dim " +
                        std::to_string(model.config().external_dim));
  const auto pred = model.parse_all(recs, ctx.enabled() ? &ctx : nullptr);
  if (output.empty() || output == "-") {
    write_conll(std::cout, recs, pred);
  } else {
    std::ofstream out(output);
    if (!out) throw DataError("cannot open " + output + " for writing");
    write_conll(out, recs, pred);
  }
  return kOk;
}

// ---- eval / analyze --------------------------------------------------------------

int cmd_eval(const std::string& config, const std::string& gold_path, const std::string& pred_path, bool json) {
  const RunConfig rc = load_config(config);
  const auto gold = read_treebank(gold_path);
  const auto pred = read_treebank(pred_path, false);
  const EvalReport r = attachment_scores(gold, arcs_of_all(pred), rc.eval);
  if (json) std::cout << report_json(r).dump(2) << "\n";
  else std::cout << report_text(r);
  return kOk;
}

int cmd_analyze(const std::string& config, const std::string& gold_path, const std::string& pred_path) {
  const RunConfig rc = load_config(config);
  const auto gold = read_treebank(gold_path);
  const auto pred = read_treebank(pred_path, false);
  std::cout << profile_csv(error_profile(gold, arcs_of_all(pred), rc.eval));
  return kOk;
}

int cmd_synth(std::size_t count, std::uint64_t seed) {
  synthetic::Grammar g(seed);
  const auto corpus = g.corpus(count);
  write_conll(std::cout, corpus, arcs_of_all(corpus));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Easy-first dependency parser with recursive subtree encoders"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model and keep the checkpoint with the best dev UAS");
  train->add_option("--config", ta.config, "JSON config with model/train/eval/paths sections");
  train->add_option("--train", ta.train, "Training treebank (CoNLL-X or CoNLL-U)");
  train->add_option("--dev", ta.dev, "Development treebank");
  train->add_option("--model", ta.model, "Checkpoint output path");
  train->add_option("--pretrained", ta.pretrained, "Pretrained word vectors (word2vec text format)");
  train->add_option("--train-context", ta.train_context, "External contextual vectors for the training set");
  train->add_option("--dev-context", ta.dev_context, "External contextual vectors for the dev set");
  train->add_option("--epochs", ta.epochs);
  train->add_option("--lr", ta.lr, "Learning rate");
  train->add_option("--clip", ta.clip, "Gradient L2 clipping threshold");
  train->add_option("--word-dropout", ta.word_dropout, "Word dropout alpha");
  train->add_option("--seed", ta.seed);
  train->add_option("--encoder", ta.encoder, "tree-lstm, rcnn or none");
  train->add_option("--word-dim", ta.word_dim);
  train->add_option("--pos-dim", ta.pos_dim);
  train->add_option("--lstm-dim", ta.lstm_dim, "BiLSTM hidden size per direction");
  train->add_option("--tree-dim", ta.tree_dim);
  train->add_option("--mlp-dim", ta.mlp_dim);
  train->add_option("--window", ta.window, "Pending entries on each side of the scored pair");
  train->add_flag("--unlabeled", ta.unlabeled, "Predict heads only");
  train->add_flag("--no-bilstm", ta.no_bilstm, "Feed token embeddings straight to the subtree encoder");

  std::string p_config, p_model, p_input, p_output, p_context;
  auto* parse = app.add_subcommand("parse", "Parse CoNLL input with a trained model");
  parse->add_option("--config", p_config);
  parse->add_option("--model", p_model, "Checkpoint path");
  parse->add_option("--input", p_input, "Input treebank, '-' for stdin (default)");
  parse->add_option("--output", p_output, "Output path, '-' for stdout (default)");
  parse->add_option("--context", p_context, "External contextual vectors for the input");

  std::string e_config, e_gold, e_pred;
  bool e_json = false;
  auto* eval = app.add_subcommand("eval", "UAS/LAS of predicted trees against gold");
  eval->add_option("--config", e_config);
  eval->add_option("--gold", e_gold)->required();
  eval->add_option("--pred", e_pred)->required();
  eval->add_flag("--json", e_json, "Print a JSON report");

  std::string a_config, a_gold, a_pred;
  auto* analyze = app.add_subcommand("analyze", "Error rates by sentence length and POS group as CSV");
  analyze->add_option("--config", a_config);
  analyze->add_option("--gold", a_gold)->required();
  analyze->add_option("--pred", a_pred)->required();

  std::size_t s_count = 100;
  std::uint64_t s_seed = 1;
  auto* synth = app.add_subcommand("synth", "Write a synthetic treebank to stdout");
  synth->add_option("--sentences", s_count);
  synth->add_option("--seed", s_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(ta);
    if (*parse) return cmd_parse(p_config, p_model, p_input, p_output, p_context);
    if (*eval) return cmd_eval(e_config, e_gold, e_pred, e_json);
    if (*analyze) return cmd_analyze(a_config, a_gold, a_pred);
    if (*synth) return cmd_synth(s_count, s_seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const MismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMismatch;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMismatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
