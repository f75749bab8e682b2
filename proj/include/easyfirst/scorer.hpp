#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "easyfirst/autodiff.hpp"
#include "easyfirst/embedding.hpp"

namespace easyfirst {

/// Two-layer tanh MLP over a window of pending representations around the
/// candidate pair (pending[i], pending[i+1]): `window` entries on each side
/// plus the pair itself, PAD vectors past either end. Output layout is
/// kind-major: [left x labels, right x labels].
///
/// The first layer is stored as one matrix per window slot, so
/// W1 * concat(tau_0..tau_k) is evaluated as sum_s W1_s tau_s. The cached
/// path (slot_products + score_from_slots) and the graph path (score) use
/// the same kernels in the same order and agree bit-for-bit.
class Scorer {
 public:
  Scorer() = default;

  static Scorer create(ParameterStore& store, std::size_t tau_dim, std::size_t hidden, std::size_t window,
                       std::size_t labels, std::mt19937_64& rng) {
    Scorer s;
    s.window_ = window;
    s.labels_ = labels;
    const std::size_t slots = 2 * window + 2;
    // Glorot range of the full (hidden x slots*tau) first layer, split per slot.
    const double range = std::sqrt(6.0 / static_cast<double>(hidden + tau_dim * slots));
    for (std::size_t k = 0; k < slots; ++k)
      s.W1_.push_back(&store.add("scorer.W1." + std::to_string(k), uniform_tensor(hidden, tau_dim, range, rng)));
    s.b1_ = &store.add("scorer.b1", Tensor(hidden, 1));
    s.W2_ = &store.add("scorer.W2", glorot(2 * labels, hidden, rng));
    s.b2_ = &store.add("scorer.b2", Tensor(2 * labels, 1));
    s.pad_left_ = &store.add("scorer.pad_left", uniform_tensor(tau_dim, 1, 0.1, rng));
    s.pad_right_ = &store.add("scorer.pad_right", uniform_tensor(tau_dim, 1, 0.1, rng));
    return s;
  }

  static Scorer bind(ParameterStore& store, std::size_t window) {
    Scorer s;
    s.window_ = window;
    for (std::size_t k = 0; k < 2 * window + 2; ++k) s.W1_.push_back(&store.get("scorer.W1." + std::to_string(k)));
    s.b1_ = &store.get("scorer.b1");
    s.W2_ = &store.get("scorer.W2");
    s.b2_ = &store.get("scorer.b2");
    s.pad_left_ = &store.get("scorer.pad_left");
    s.pad_right_ = &store.get("scorer.pad_right");
    s.labels_ = s.b2_->value.rows / 2;
    return s;
  }

  std::size_t window() const { return window_; }
  std::size_t slots() const { return W1_.size(); }
  std::size_t labels() const { return labels_; }
  std::size_t outputs() const { return 2 * labels_; }
  std::size_t input_dim() const { return W1_.front()->value.cols; }
  const Tensor& pad_left() const { return pad_left_->value; }
  const Tensor& pad_right() const { return pad_right_->value; }

  /// Pending index covered by `slot` when scoring position i (may be out of range).
  long slot_index(std::size_t position, std::size_t slot) const {
    return static_cast<long>(position) - static_cast<long>(window_) + static_cast<long>(slot);
  }

  /// W1_s * tau for every slot s.
  std::vector<Tensor> slot_products(const Tensor& tau) const {
    std::vector<Tensor> out(slots());
    for (std::size_t s = 0; s < slots(); ++s) kernels::matmul(W1_[s]->value, tau, out[s]);
    return out;
  }

  /// Scores from cached slot products; `per_slot[s]` is the product cached for slot s.
  Tensor score_from_slots(const std::vector<const Tensor*>& per_slot) const {
    Tensor hidden = b1_->value;
    for (const Tensor* p : per_slot) kernels::add_into(hidden.span(), p->span());
    for (double& v : hidden.data) v = std::tanh(v);
    Tensor out;
    kernels::matmul(W2_->value, hidden, out);
    Tensor res = b2_->value;
    kernels::add_into(res.span(), out.span());
    return res;
  }

  /// Graph version: `taus` holds one expression per slot.
  Expr score(Graph& g, const std::vector<Expr>& taus) const {
    std::vector<std::pair<Expr, Expr>> terms;
    for (std::size_t s = 0; s < slots(); ++s) terms.emplace_back(g.parameter(*W1_[s]), taus.at(s));
    Expr hidden = tanh(g.affine(g.parameter(*b1_), terms));
    return g.affine(g.parameter(*b2_), {{g.parameter(*W2_), hidden}});
  }

  Expr pad_left(Graph& g) const { return g.parameter(*pad_left_); }
  Expr pad_right(Graph& g) const { return g.parameter(*pad_right_); }

 private:
  std::size_t window_ = 2;
  std::size_t labels_ = 1;
  std::vector<Parameter*> W1_;
  Parameter* b1_ = nullptr;
  Parameter* W2_ = nullptr;
  Parameter* b2_ = nullptr;
  Parameter* pad_left_ = nullptr;
  Parameter* pad_right_ = nullptr;
};

}  // namespace easyfirst
