#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "easyfirst/autodiff.hpp"
#include "easyfirst/embedding.hpp"

namespace easyfirst {

/// Gate parameters of one LSTM direction: per gate, input matrix W,
/// recurrent matrix U and bias b. Gates: input, forget, output, candidate.
struct LstmCellParams {
  Parameter* W[4] = {};
  Parameter* U[4] = {};
  Parameter* b[4] = {};
  std::size_t hidden = 0;

  static constexpr const char* kGateNames[4] = {"i", "f", "o", "u"};

  static LstmCellParams create(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                               std::size_t hidden_dim, std::mt19937_64& rng) {
    LstmCellParams p;
    p.hidden = hidden_dim;
    for (int g = 0; g < 4; ++g) {
      const std::string gate = kGateNames[g];
      p.W[g] = &store.add(prefix + ".W" + gate, glorot(hidden_dim, input_dim, rng));
      p.U[g] = &store.add(prefix + ".U" + gate, glorot(hidden_dim, hidden_dim, rng));
      p.b[g] = &store.add(prefix + ".b" + gate, Tensor(hidden_dim, 1, g == 1 ? 1.0 : 0.0));
    }
    return p;
  }

  static LstmCellParams bind(ParameterStore& store, const std::string& prefix) {
    LstmCellParams p;
    for (int g = 0; g < 4; ++g) {
      const std::string gate = kGateNames[g];
      p.W[g] = &store.get(prefix + ".W" + gate);
      p.U[g] = &store.get(prefix + ".U" + gate);
      p.b[g] = &store.get(prefix + ".b" + gate);
    }
    p.hidden = p.b[0]->value.rows;
    return p;
  }

  /// One recurrent step; returns (h, c).
  std::pair<Expr, Expr> step(Graph& g, Expr x, Expr h_prev, Expr c_prev) const {
    Expr pre[4];
    for (int k = 0; k < 4; ++k)
      pre[k] = g.affine(g.parameter(*b[k]), {{g.parameter(*W[k]), x}, {g.parameter(*U[k]), h_prev}});
    Expr i = sigmoid(pre[0]);
    Expr f = sigmoid(pre[1]);
    Expr o = sigmoid(pre[2]);
    Expr u = tanh(pre[3]);
    Expr c = cmul(i, u) + cmul(f, c_prev);
    Expr h = cmul(o, tanh(c));
    return {h, c};
  }
};

/// One-layer bidirectional LSTM. Output j is forward_h[j] (+) backward_h[j],
/// width 2 x hidden.
class BiLstmEncoder {
 public:
  BiLstmEncoder() = default;
  BiLstmEncoder(LstmCellParams forward, LstmCellParams backward) : fwd_(forward), bwd_(backward) {}

  static BiLstmEncoder create(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                              std::size_t hidden_dim, std::mt19937_64& rng) {
    auto f = LstmCellParams::create(store, prefix + ".fwd", input_dim, hidden_dim, rng);
    auto b = LstmCellParams::create(store, prefix + ".bwd", input_dim, hidden_dim, rng);
    return {f, b};
  }

  static BiLstmEncoder bind(ParameterStore& store, const std::string& prefix) {
    return {LstmCellParams::bind(store, prefix + ".fwd"), LstmCellParams::bind(store, prefix + ".bwd")};
  }

  std::size_t output_dim() const { return fwd_.hidden + bwd_.hidden; }

  std::vector<Expr> encode(Graph& g, const std::vector<Expr>& inputs) const {
    if (inputs.empty()) throw std::invalid_argument("sentence encoder: empty sentence");
    const std::size_t n = inputs.size();
    std::vector<Expr> fh(n), bh(n);
    Expr h = g.zeros(fwd_.hidden), c = g.zeros(fwd_.hidden);
    for (std::size_t t = 0; t < n; ++t) {
      std::tie(h, c) = fwd_.step(g, inputs[t], h, c);
      fh[t] = h;
    }
    h = g.zeros(bwd_.hidden);
    c = g.zeros(bwd_.hidden);
    for (std::size_t t = n; t-- > 0;) {
      std::tie(h, c) = bwd_.step(g, inputs[t], h, c);
      bh[t] = h;
    }
    std::vector<Expr> out(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = g.concat({fh[t], bh[t]});
    return out;
  }

  const LstmCellParams& forward_cell() const { return fwd_; }
  const LstmCellParams& backward_cell() const { return bwd_; }

 private:
  LstmCellParams fwd_;
  LstmCellParams bwd_;
};

}  // namespace easyfirst
