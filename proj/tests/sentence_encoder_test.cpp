#include <gtest/gtest.h>

#include <random>

#include "easyfirst/model.hpp"
#include "easyfirst/sentence_encoder.hpp"

using namespace easyfirst;

namespace {

std::vector<Tensor> random_inputs(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(uniform_tensor(dim, 1, 1.0, rng));
  return out;
}

std::vector<Expr> constants(Graph& g, const std::vector<Tensor>& ts) {
  std::vector<Expr> out;
  for (const Tensor& t : ts) out.push_back(g.constant(t));
  return out;
}

}  // namespace

TEST(LstmCell, ForgetBiasStartsAtOne) {
  std::mt19937_64 rng(1);
  ParameterStore st;
  const auto p = LstmCellParams::create(st, "cell", 3, 4, rng);
  EXPECT_EQ(p.b[1]->value, Tensor(4, 1, 1.0));
  EXPECT_EQ(p.b[0]->value, Tensor(4, 1, 0.0));
  EXPECT_EQ(p.W[0]->value.cols, 3u);
  EXPECT_EQ(p.U[3]->value.rows, 4u);
}

TEST(BiLstm, OutputWidthIsTwiceHidden) {
  std::mt19937_64 rng(2);
  ParameterStore st;
  const auto enc = BiLstmEncoder::create(st, "bilstm", 3, 5, rng);
  for (std::size_t n : {1u, 2u, 9u}) {
    Graph g;
    const auto out = enc.encode(g, constants(g, random_inputs(n, 3, rng)));
    ASSERT_EQ(out.size(), n);
    for (Expr e : out) EXPECT_EQ(e.rows(), 10u);
  }
  Graph g;
  EXPECT_THROW(enc.encode(g, {}), std::invalid_argument);
}

TEST(BiLstm, OneTokenSentenceGivesRootPlusToken) {
  const std::vector<SentenceRecord> train{make_record({"hi"}, {"UH"})};
  ModelConfig cfg;
  cfg.word_dim = cfg.pos_dim = 3;
  cfg.lstm_dim = 4;
  cfg.tree_dim = cfg.mlp_dim = 4;
  cfg.distance_dim = cfg.relation_dim = 2;
  const Model m = Model::build(cfg, train);
  const ContextualSentence cs = m.encode_values(train[0]);
  ASSERT_EQ(cs.x.size(), 2u);
  EXPECT_EQ(cs.x[1].rows, 8u);
  EXPECT_THROW(m.encode_values(SentenceRecord{}), std::invalid_argument);
}

TEST(BiLstm, ReversedInputWithTiedWeightsSwapsHalves) {
  std::mt19937_64 rng(3);
  ParameterStore st;
  const auto cell = LstmCellParams::create(st, "tied", 3, 4, rng);
  const BiLstmEncoder enc(cell, cell);
  const auto xs = random_inputs(5, 3, rng);
  auto rev = xs;
  std::reverse(rev.begin(), rev.end());
  Graph g1, g2;
  const auto a = enc.encode(g1, constants(g1, xs));
  const auto b = enc.encode(g2, constants(g2, rev));
  for (std::size_t j = 0; j < 5; ++j) {
    const Tensor& aj = a[j].value();
    const Tensor& bj = b[4 - j].value();
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_EQ(aj[k], bj[4 + k]);
      EXPECT_EQ(aj[4 + k], bj[k]);
    }
  }
}

TEST(BiLstm, OrderMatters) {
  std::mt19937_64 rng(4);
  ParameterStore st;
  const auto enc = BiLstmEncoder::create(st, "bilstm", 3, 4, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto xs = random_inputs(4, 3, rng);
    auto perm = xs;
    std::swap(perm[0], perm[2]);
    Graph g1, g2;
    const auto a = enc.encode(g1, constants(g1, xs));
    const auto b = enc.encode(g2, constants(g2, perm));
    // Position 1 holds the same token in both orders but sees different context.
    EXPECT_NE(a[1].value(), b[1].value());
  }
}

TEST(BiLstm, IsDeterministic) {
  std::mt19937_64 rng(5);
  ParameterStore st;
  const auto enc = BiLstmEncoder::create(st, "bilstm", 3, 4, rng);
  const auto xs = random_inputs(6, 3, rng);
  Graph g1, g2;
  const auto a = enc.encode(g1, constants(g1, xs));
  const auto b = enc.encode(g2, constants(g2, xs));
  for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(a[j].value(), b[j].value());
}

TEST(BiLstm, GradientCheckOnFiveTokenSentence) {
  std::mt19937_64 rng(6);
  ParameterStore st;
  const auto enc = BiLstmEncoder::create(st, "bilstm", 3, 3, rng);
  const auto xs = random_inputs(5, 3, rng);
  const Tensor w = uniform_tensor(1, 6, 1.0, rng);
  const double err = gradient_check(
      [&](Graph& g) {
        const auto out = enc.encode(g, constants(g, xs));
        std::vector<Expr> terms;
        for (Expr e : out) terms.push_back(matmul(g.constant(w), e));
        return g.sum_list(terms, 1);
      },
      st);
  EXPECT_LE(err, 1e-5);
}
