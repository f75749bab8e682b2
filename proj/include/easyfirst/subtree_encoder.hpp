#pragma once

// Subtree representations: the child feature gate, the child-sum tree-LSTM
// composer and the simplified RCNN composer.

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "easyfirst/autodiff.hpp"
#include "easyfirst/embedding.hpp"

namespace easyfirst {

enum class EncoderKind { tree_lstm, rcnn, none };

inline std::string to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::tree_lstm: return "tree-lstm";
    case EncoderKind::rcnn: return "rcnn";
    case EncoderKind::none: return "none";
  }
  return "?";
}

inline EncoderKind parse_encoder_kind(const std::string& s) {
  if (s == "tree-lstm") return EncoderKind::tree_lstm;
  if (s == "rcnn") return EncoderKind::rcnn;
  if (s == "none") return EncoderKind::none;
  throw std::invalid_argument("unknown subtree encoder '" + s + "' (expected tree-lstm, rcnn or none)");
}

/// Values of a subtree representation. tau is what the scorer sees; for the
/// tree-LSTM tau == h. RCNN and "none" have no cell and keep c at zero.
struct SubtreeRep {
  Tensor tau;
  Tensor h;
  Tensor c;
  bool operator==(const SubtreeRep&) const = default;
};

struct SubtreeExpr {
  Expr tau;
  Expr h;
  Expr c;

  SubtreeRep values() const { return {tau.value(), h.value(), c.value()}; }
};

/// A child about to be gated: its representation plus the arc features.
struct ChildInput {
  Expr tau;
  Expr c;
  int head_index = 0;      // original sentence positions, ROOT = 0
  int modifier_index = 0;
  std::size_t relation = Vocab::kNoRel;
};

struct GatedChild {
  Expr g;
  Expr c;
};

struct TreeLstmParams {
  Parameter* W[4] = {};  // i, f, o, u; act on the head input x
  Parameter* U[4] = {};  // act on gated child vectors
  Parameter* b[4] = {};
};

class SubtreeEncoder {
 public:
  static constexpr const char* kGates[4] = {"i", "f", "o", "u"};

  SubtreeEncoder() = default;

  /// Registers the parameters needed by `kind`. `input_dim` is the width of x.
  static SubtreeEncoder create(ParameterStore& store, EncoderKind kind, std::size_t input_dim, std::size_t tree_dim,
                               EmbeddingTable distance, EmbeddingTable relation, DistanceBucketer bucketer,
                               std::mt19937_64& rng) {
    SubtreeEncoder e;
    e.kind_ = kind;
    e.input_dim_ = input_dim;
    e.dim_ = kind == EncoderKind::none ? input_dim : tree_dim;
    e.distance_ = distance;
    e.relation_ = relation;
    e.bucketer_ = bucketer;
    if (kind == EncoderKind::none) return e;
    const std::size_t gate_in = tree_dim + distance.dim() + relation.dim();
    e.gate_W_ = &store.add("gate.W", glorot(tree_dim, gate_in, rng));
    e.gate_b_ = &store.add("gate.b", Tensor(tree_dim, 1));
    if (kind == EncoderKind::tree_lstm) {
      for (int k = 0; k < 4; ++k) {
        const std::string gate = kGates[k];
        e.tree_.W[k] = &store.add("tree.W" + gate, glorot(tree_dim, input_dim, rng));
        e.tree_.U[k] = &store.add("tree.U" + gate, glorot(tree_dim, tree_dim, rng));
        e.tree_.b[k] = &store.add("tree.b" + gate, Tensor(tree_dim, 1, k == 1 ? 1.0 : 0.0));
      }
    } else {
      e.rcnn_W_ = &store.add("rcnn.W", glorot(tree_dim, input_dim + tree_dim, rng));
    }
    return e;
  }

  static SubtreeEncoder bind(ParameterStore& store, EncoderKind kind, std::size_t input_dim, EmbeddingTable distance,
                             EmbeddingTable relation, DistanceBucketer bucketer) {
    SubtreeEncoder e;
    e.kind_ = kind;
    e.input_dim_ = input_dim;
    e.dim_ = input_dim;
    e.distance_ = distance;
    e.relation_ = relation;
    e.bucketer_ = bucketer;
    if (kind == EncoderKind::none) return e;
    e.gate_W_ = &store.get("gate.W");
    e.gate_b_ = &store.get("gate.b");
    e.dim_ = e.gate_b_->value.rows;
    if (kind == EncoderKind::tree_lstm) {
      for (int k = 0; k < 4; ++k) {
        const std::string gate = kGates[k];
        e.tree_.W[k] = &store.get("tree.W" + gate);
        e.tree_.U[k] = &store.get("tree.U" + gate);
        e.tree_.b[k] = &store.get("tree.b" + gate);
      }
    } else {
      e.rcnn_W_ = &store.get("rcnn.W");
    }
    return e;
  }

  EncoderKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t input_dim() const { return input_dim_; }
  const DistanceBucketer& bucketer() const { return bucketer_; }
  const TreeLstmParams& tree_params() const { return tree_; }

  /// g = tanh(W_phi (tau_child (+) v_distance (+) v_relation) + b_phi)
  Expr gate_child(Graph& g, Expr child_tau, int head_index, int modifier_index, std::size_t relation) const {
    require_gate();
    Expr vd = distance_.lookup(g, bucketer_.bucket(head_index, modifier_index));
    Expr vr = relation_.lookup(g, relation);
    Expr in = g.concat({child_tau, vd, vr});
    return tanh(g.affine(g.parameter(*gate_b_), {{g.parameter(*gate_W_), in}}));
  }

  /// Child-sum tree-LSTM over gated children. Children are visited in a
  /// canonical order (by value) so the sums do not depend on list order.
  /// With no children this is the leaf case f(0, x).
  SubtreeExpr compose_tree_lstm(Graph& g, std::vector<GatedChild> children, Expr x) const {
    if (kind_ != EncoderKind::tree_lstm) throw std::logic_error("compose_tree_lstm: encoder is " + to_string(kind_));
    for (const GatedChild& ch : children) {
      if (ch.g.rows() != dim_ || ch.c.rows() != dim_)
        throw ShapeError(OpKind::sum_list, "child of width " + std::to_string(ch.g.rows()) + "/" +
                                               std::to_string(ch.c.rows()) + " but tree width is " + std::to_string(dim_));
    }
    std::sort(children.begin(), children.end(), [](const GatedChild& a, const GatedChild& b) {
      const auto& av = a.g.value().data;
      const auto& bv = b.g.value().data;
      if (av != bv) return std::lexicographical_compare(av.begin(), av.end(), bv.begin(), bv.end());
      const auto& ac = a.c.value().data;
      const auto& bc = b.c.value().data;
      return std::lexicographical_compare(ac.begin(), ac.end(), bc.begin(), bc.end());
    });

    std::vector<Expr> gs, fcs;
    for (const GatedChild& ch : children) gs.push_back(ch.g);
    Expr h_sum = g.sum_list(gs, dim_);

    auto gate = [&](int k, Expr hidden) {
      return g.affine(g.parameter(*tree_.b[k]), {{g.parameter(*tree_.W[k]), x}, {g.parameter(*tree_.U[k]), hidden}});
    };
    Expr i = sigmoid(gate(0, h_sum));
    Expr o = sigmoid(gate(2, h_sum));
    Expr u = tanh(gate(3, h_sum));
    if (!children.empty()) {
      Expr fx = g.affine(g.parameter(*tree_.b[1]), {{g.parameter(*tree_.W[1]), x}});
      Expr uf = g.parameter(*tree_.U[1]);
      for (const GatedChild& ch : children) {
        Expr f = sigmoid(fx + matmul(uf, ch.g));
        fcs.push_back(cmul(f, ch.c));
      }
    }
    Expr c = cmul(i, u) + g.sum_list(fcs, dim_);
    Expr h = cmul(o, tanh(c));
    return {h, h, c};
  }

  /// Simplified RCNN: z_k = tanh(W_global (x (+) g_k)), tau = row-wise max
  /// over k. With no children a single zero child is pooled.
  SubtreeExpr compose_rcnn(Graph& g, const std::vector<Expr>& gated, Expr x) const {
    if (kind_ != EncoderKind::rcnn) throw std::logic_error("compose_rcnn: encoder is " + to_string(kind_));
    Expr W = g.parameter(*rcnn_W_);
    std::vector<Expr> zs;
    auto column = [&](Expr gk) { zs.push_back(tanh(matmul(W, g.concat({x, gk})))); };
    if (gated.empty()) column(g.zeros(dim_));
    for (Expr gk : gated) {
      if (gk.rows() != dim_)
        throw ShapeError(OpKind::row_max_pool, "child of width " + std::to_string(gk.rows()) + " but tree width is " +
                                                   std::to_string(dim_));
      column(gk);
    }
    Expr tau = g.row_max_pool(zs);
    return {tau, tau, g.zeros(dim_)};
  }

  /// Gates each child and composes with the configured composer.
  SubtreeExpr compose(Graph& g, const std::vector<ChildInput>& children, Expr x) const {
    switch (kind_) {
      case EncoderKind::none:
        return {x, x, g.zeros(dim_)};
      case EncoderKind::tree_lstm: {
        std::vector<GatedChild> gated;
        for (const ChildInput& ch : children)
          gated.push_back({gate_child(g, ch.tau, ch.head_index, ch.modifier_index, ch.relation), ch.c});
        return compose_tree_lstm(g, std::move(gated), x);
      }
      case EncoderKind::rcnn: {
        std::vector<Expr> gated;
        for (const ChildInput& ch : children)
          gated.push_back(gate_child(g, ch.tau, ch.head_index, ch.modifier_index, ch.relation));
        return compose_rcnn(g, gated, x);
      }
    }
    throw std::logic_error("unreachable");
  }

  SubtreeExpr leaf(Graph& g, Expr x) const { return compose(g, {}, x); }

 private:
  void require_gate() const {
    if (!gate_W_) throw std::logic_error("subtree encoder '" + to_string(kind_) + "' has no child gate");
  }

  EncoderKind kind_ = EncoderKind::tree_lstm;
  std::size_t input_dim_ = 0;
  std::size_t dim_ = 0;
  EmbeddingTable distance_;
  EmbeddingTable relation_;
  DistanceBucketer bucketer_;
  Parameter* gate_W_ = nullptr;
  Parameter* gate_b_ = nullptr;
  TreeLstmParams tree_;
  Parameter* rcnn_W_ = nullptr;
};

}  // namespace easyfirst
