#pragma once

// Reverse-mode automatic differentiation over dense column vectors and small
// matrices. Nodes are evaluated eagerly as they are added to a Graph; a Graph
// is built per computation and thrown away afterwards.

#include <cmath>
#include <cstddef>
#include <cstring>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "easyfirst/tensor.hpp"

namespace easyfirst {

enum class OpKind {
  parameter,
  constant,
  lookup,
  matmul,
  add,
  sub,
  cmul,
  scale,
  tanh,
  sigmoid,
  relu,
  concat,
  sum_list,
  row_max_pool,
  affine,
  pick,
};

inline const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::parameter: return "parameter";
    case OpKind::constant: return "constant";
    case OpKind::lookup: return "lookup";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::cmul: return "elementwise-mul";
    case OpKind::scale: return "scale";
    case OpKind::tanh: return "tanh";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::relu: return "relu";
    case OpKind::concat: return "concat";
    case OpKind::sum_list: return "sum-of-list";
    case OpKind::row_max_pool: return "row-max-pool";
    case OpKind::affine: return "affine";
    case OpKind::pick: return "pick";
  }
  return "?";
}

class ShapeError : public std::runtime_error {
 public:
  ShapeError(OpKind op, const Tensor& a, const Tensor& b)
      : std::runtime_error(std::string(op_name(op)) + ": shape mismatch " + a.shape_string() + " vs " +
                           b.shape_string()),
        op_(op) {}
  ShapeError(OpKind op, const std::string& what) : std::runtime_error(std::string(op_name(op)) + ": " + what), op_(op) {}
  OpKind op() const { return op_; }

 private:
  OpKind op_;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
  std::size_t updates = 0;
};

/// Named parameters. Names are unique and a parameter's shape never changes
/// after it is added. Iteration is in name order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor init) {
    if (params_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    Parameter p;
    p.name = name;
    p.grad = Tensor(init.rows, init.cols);
    p.value = std::move(init);
    return params_.emplace(name, std::move(p)).first->second;
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  Parameter& get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }
  const Parameter& get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }

  /// Replace a value, keeping the shape contract.
  void assign(const std::string& name, const Tensor& value) {
    Parameter& p = get(name);
    if (!p.value.same_shape(value))
      throw std::invalid_argument("parameter " + name + ": shape " + p.value.shape_string() + " cannot take " +
                                  value.shape_string());
    p.value = value;
  }

  void zero_grad() {
    for (auto& [_, p] : params_) p.grad.fill(0.0);
  }

  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }
  std::size_t entry_count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter> params_;
};

class Graph;

/// Handle to a node inside a Graph.
struct Expr {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows; }
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Expr constant(Tensor v) {
    Node n{OpKind::constant};
    n.value = std::move(v);
    return push(std::move(n));
  }

  Expr zeros(std::size_t rows, std::size_t cols = 1) { return constant(Tensor(rows, cols)); }

  Expr parameter(Parameter& p) {
    Node n{OpKind::parameter};
    n.param = &p;
    return push(std::move(n));
  }

  /// Row `row` of an embedding table (vocab x dim), returned as a (dim x 1) column.
  Expr lookup(Parameter& table, std::size_t row) {
    if (row >= table.value.rows)
      throw std::out_of_range("lookup: row " + std::to_string(row) + " out of range for table " + table.name + " " +
                              table.value.shape_string());
    Node n{OpKind::lookup};
    n.param = &table;
    n.index = row;
    n.value = Tensor(table.value.cols, 1);
    std::memcpy(n.value.data.data(), table.value.data.data() + row * table.value.cols,
                sizeof(double) * table.value.cols);
    return push(std::move(n));
  }

  Expr matmul(Expr a, Expr b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols != bv.rows) throw ShapeError(OpKind::matmul, av, bv);
    Node n{OpKind::matmul, {a.id, b.id}};
    kernels::matmul(av, bv, n.value);
    return push(std::move(n));
  }

  Expr add(Expr a, Expr b) { return binary(OpKind::add, a, b, [](double x, double y) { return x + y; }); }
  Expr sub(Expr a, Expr b) { return binary(OpKind::sub, a, b, [](double x, double y) { return x - y; }); }
  Expr cmul(Expr a, Expr b) { return binary(OpKind::cmul, a, b, [](double x, double y) { return x * y; }); }

  Expr scale(Expr a, double s) {
    Node n{OpKind::scale, {a.id}};
    n.scalar = s;
    n.value = value(a);
    for (double& v : n.value.data) v *= s;
    return push(std::move(n));
  }

  Expr tanh(Expr a) { return unary(OpKind::tanh, a, [](double x) { return std::tanh(x); }); }
  Expr sigmoid(Expr a) {
    return unary(OpKind::sigmoid, a, [](double x) {
      return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    });
  }
  Expr relu(Expr a) { return unary(OpKind::relu, a, [](double x) { return x > 0 ? x : 0.0; }); }

  /// Vertical concatenation of tensors with equal column counts.
  Expr concat(const std::vector<Expr>& parts) {
    if (parts.empty()) throw ShapeError(OpKind::concat, "empty input list");
    Node n{OpKind::concat};
    std::size_t rows = 0;
    const std::size_t cols = value(parts.front()).cols;
    for (Expr p : parts) {
      const Tensor& v = value(p);
      if (v.cols != cols) throw ShapeError(OpKind::concat, value(parts.front()), v);
      rows += v.rows;
      n.inputs.push_back(p.id);
    }
    n.value = Tensor(rows, cols);
    std::size_t off = 0;
    for (Expr p : parts) {
      const Tensor& v = value(p);
      std::copy(v.data.begin(), v.data.end(), n.value.data.begin() + static_cast<std::ptrdiff_t>(off));
      off += v.size();
    }
    return push(std::move(n));
  }

  /// Sum of a list of equally shaped tensors. An empty list yields zeros of the given shape.
  Expr sum_list(const std::vector<Expr>& parts, std::size_t rows, std::size_t cols = 1) {
    Node n{OpKind::sum_list};
    n.value = Tensor(rows, cols);
    for (Expr p : parts) {
      const Tensor& v = value(p);
      if (!v.same_shape(n.value)) throw ShapeError(OpKind::sum_list, n.value, v);
      kernels::add_into(n.value.span(), v.span());
      n.inputs.push_back(p.id);
    }
    return push(std::move(n));
  }

  /// Elementwise maximum across a nonempty list of equally shaped tensors.
  /// Ties route the gradient to the earliest list entry.
  Expr row_max_pool(const std::vector<Expr>& parts) {
    if (parts.empty()) throw ShapeError(OpKind::row_max_pool, "empty input list");
    Node n{OpKind::row_max_pool};
    n.value = value(parts.front());
    n.argmax.assign(n.value.size(), 0);
    n.inputs.push_back(parts.front().id);
    for (std::size_t k = 1; k < parts.size(); ++k) {
      const Tensor& v = value(parts[k]);
      if (!v.same_shape(n.value)) throw ShapeError(OpKind::row_max_pool, n.value, v);
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] > n.value[i]) {
          n.value[i] = v[i];
          n.argmax[i] = k;
        }
      }
      n.inputs.push_back(parts[k].id);
    }
    return push(std::move(n));
  }

  /// bias + sum_k W_k x_k, accumulated in the order given.
  Expr affine(Expr bias, const std::vector<std::pair<Expr, Expr>>& terms) {
    Node n{OpKind::affine, {bias.id}};
    n.value = value(bias);
    Tensor tmp;
    for (const auto& [w, x] : terms) {
      const Tensor& wv = value(w);
      const Tensor& xv = value(x);
      if (wv.cols != xv.rows) throw ShapeError(OpKind::affine, wv, xv);
      kernels::matmul(wv, xv, tmp);
      if (!tmp.same_shape(n.value)) throw ShapeError(OpKind::affine, n.value, tmp);
      kernels::add_into(n.value.span(), tmp.span());
      n.inputs.push_back(w.id);
      n.inputs.push_back(x.id);
    }
    return push(std::move(n));
  }

  /// Scalar (1x1) holding entry `i` of `a`.
  Expr pick(Expr a, std::size_t i) {
    const Tensor& av = value(a);
    if (i >= av.size()) throw ShapeError(OpKind::pick, "index " + std::to_string(i) + " outside " + av.shape_string());
    Node n{OpKind::pick, {a.id}};
    n.index = i;
    n.value = Tensor(1, 1, av[i]);
    return push(std::move(n));
  }

  const Tensor& value(Expr e) const {
    const Node& n = nodes_.at(e.id);
    return n.kind == OpKind::parameter ? n.param->value : n.value;
  }

  /// Nodes are evaluated on construction, so forward only hands back the
  /// stored root value; repeated calls never recompute.
  const Tensor& forward(Expr root) const { return value(root); }

  /// Gradient of the last backward pass with respect to `e`. For parameter
  /// nodes this is the parameter's accumulated gradient.
  const Tensor& grad(Expr e) const {
    const Node& n = nodes_.at(e.id);
    if (n.kind == OpKind::parameter) return n.param->grad;
    return n.grad;
  }

  void backward(Expr loss) {
    const Tensor& v = value(loss);
    if (v.rows != 1 || v.cols != 1)
      throw GraphError("backward: loss must be a scalar (1x1), got " + v.shape_string());
    std::vector<std::pair<Expr, Tensor>> seeds;
    seeds.emplace_back(loss, Tensor(1, 1, 1.0));
    backward(seeds);
  }

  /// Back-propagate arbitrary upstream gradients. Parameter gradients
  /// accumulate across calls; node gradients are reset on each call.
  void backward(const std::vector<std::pair<Expr, Tensor>>& seeds) {
    std::vector<char> live(nodes_.size(), 0);
    std::size_t top = 0;
    for (const auto& [e, g] : seeds) {
      if (!g.same_shape(value(e))) throw GraphError("backward: seed shape " + g.shape_string() + " does not match node " + value(e).shape_string());
      live[e.id] = 1;
      top = std::max(top, e.id + 1);
    }
    for (std::size_t i = top; i-- > 0;) {
      if (!live[i]) continue;
      for (std::size_t in : nodes_[i].inputs) live[in] = 1;
    }
    for (std::size_t i = 0; i < top; ++i) {
      Node& n = nodes_[i];
      if (n.kind != OpKind::parameter) n.grad = live[i] ? Tensor(n.value.rows, n.value.cols) : Tensor();
    }
    for (const auto& [e, g] : seeds) kernels::add_into(grad_target(e.id).span(), g.span());
    for (std::size_t i = top; i-- > 0;) {
      if (live[i]) propagate(i);
    }
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t count(OpKind k) const {
    std::size_t c = 0;
    for (const Node& n : nodes_) c += n.kind == k;
    return c;
  }

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    std::size_t index = 0;
    std::vector<std::size_t> argmax;
    double scalar = 0.0;

    explicit Node(OpKind k, std::vector<std::size_t> in = {}) : kind(k), inputs(std::move(in)) {}
  };

  Expr push(Node n) {
    nodes_.push_back(std::move(n));
    return Expr{this, nodes_.size() - 1};
  }

  template <class F>
  Expr unary(OpKind kind, Expr a, F f) {
    Node n{kind, {a.id}};
    n.value = value(a);
    for (double& v : n.value.data) v = f(v);
    return push(std::move(n));
  }

  template <class F>
  Expr binary(OpKind kind, Expr a, Expr b, F f) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (!av.same_shape(bv)) throw ShapeError(kind, av, bv);
    Node n{kind, {a.id, b.id}};
    n.value = av;
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = f(av[i], bv[i]);
    return push(std::move(n));
  }

  Tensor& grad_target(std::size_t id) {
    Node& n = nodes_[id];
    if (n.kind == OpKind::parameter) {
      if (!n.param->grad.same_shape(n.param->value)) n.param->grad = Tensor(n.param->value.rows, n.param->value.cols);
      return n.param->grad;
    }
    return n.grad;
  }

  // dA += G * B^T
  static void acc_grad_left(Tensor& da, const Tensor& g, const Tensor& b) {
    for (std::size_t r = 0; r < da.rows; ++r) {
      for (std::size_t c = 0; c < g.cols; ++c) {
        const double gv = g.data[r * g.cols + c];
        if (gv == 0.0) continue;
        double* drow = da.data.data() + r * da.cols;
        for (std::size_t k = 0; k < da.cols; ++k) drow[k] += gv * b.data[k * b.cols + c];
      }
    }
  }

  // dB += A^T * G
  static void acc_grad_right(Tensor& db, const Tensor& a, const Tensor& g) {
    for (std::size_t r = 0; r < a.rows; ++r) {
      const double* arow = a.data.data() + r * a.cols;
      for (std::size_t c = 0; c < g.cols; ++c) {
        const double gv = g.data[r * g.cols + c];
        if (gv == 0.0) continue;
        for (std::size_t k = 0; k < a.cols; ++k) db.data[k * db.cols + c] += arow[k] * gv;
      }
    }
  }

  void propagate(std::size_t id) {
    Node& n = nodes_[id];
    if (n.kind == OpKind::parameter || n.kind == OpKind::constant) return;
    const Tensor& g = n.grad;
    switch (n.kind) {
      case OpKind::lookup: {
        Tensor& pg = n.param->grad;
        if (!pg.same_shape(n.param->value)) pg = Tensor(n.param->value.rows, n.param->value.cols);
        double* row = pg.data.data() + n.index * pg.cols;
        for (std::size_t i = 0; i < g.size(); ++i) row[i] += g[i];
        break;
      }
      case OpKind::matmul: {
        const Tensor& av = value(Expr{this, n.inputs[0]});
        const Tensor& bv = value(Expr{this, n.inputs[1]});
        acc_grad_left(grad_target(n.inputs[0]), g, bv);
        acc_grad_right(grad_target(n.inputs[1]), av, g);
        break;
      }
      case OpKind::add:
        kernels::add_into(grad_target(n.inputs[0]).span(), g.span());
        kernels::add_into(grad_target(n.inputs[1]).span(), g.span());
        break;
      case OpKind::sub: {
        kernels::add_into(grad_target(n.inputs[0]).span(), g.span());
        Tensor& db = grad_target(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
        break;
      }
      case OpKind::cmul: {
        const Tensor& av = value(Expr{this, n.inputs[0]});
        const Tensor& bv = value(Expr{this, n.inputs[1]});
        Tensor& da = grad_target(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
        Tensor& db = grad_target(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
        break;
      }
      case OpKind::scale: {
        Tensor& da = grad_target(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += n.scalar * g[i];
        break;
      }
      case OpKind::tanh: {
        Tensor& da = grad_target(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        break;
      }
      case OpKind::sigmoid: {
        Tensor& da = grad_target(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        break;
      }
      case OpKind::relu: {
        Tensor& da = grad_target(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (n.value[i] > 0) da[i] += g[i];
        break;
      }
      case OpKind::concat: {
        std::size_t off = 0;
        for (std::size_t in : n.inputs) {
          Tensor& d = grad_target(in);
          for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[off + i];
          off += d.size();
        }
        break;
      }
      case OpKind::sum_list:
        for (std::size_t in : n.inputs) kernels::add_into(grad_target(in).span(), g.span());
        break;
      case OpKind::row_max_pool:
        for (std::size_t i = 0; i < g.size(); ++i) grad_target(n.inputs[n.argmax[i]])[i] += g[i];
        break;
      case OpKind::affine: {
        kernels::add_into(grad_target(n.inputs[0]).span(), g.span());
        for (std::size_t t = 1; t + 1 < n.inputs.size(); t += 2) {
          const Tensor& wv = value(Expr{this, n.inputs[t]});
          const Tensor& xv = value(Expr{this, n.inputs[t + 1]});
          acc_grad_left(grad_target(n.inputs[t]), g, xv);
          acc_grad_right(grad_target(n.inputs[t + 1]), wv, g);
        }
        break;
      }
      case OpKind::pick:
        grad_target(n.inputs[0])[n.index] += g[0];
        break;
      case OpKind::parameter:
      case OpKind::constant:
        break;
    }
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Expr::value() const { return graph->value(*this); }

inline Expr matmul(Expr a, Expr b) { return a.graph->matmul(a, b); }
inline Expr operator+(Expr a, Expr b) { return a.graph->add(a, b); }
inline Expr operator-(Expr a, Expr b) { return a.graph->sub(a, b); }
inline Expr cmul(Expr a, Expr b) { return a.graph->cmul(a, b); }
inline Expr scale(Expr a, double s) { return a.graph->scale(a, s); }
inline Expr tanh(Expr a) { return a.graph->tanh(a); }
inline Expr sigmoid(Expr a) { return a.graph->sigmoid(a); }
inline Expr relu(Expr a) { return a.graph->relu(a); }
inline Expr pick(Expr a, std::size_t i) { return a.graph->pick(a, i); }

/// Plain SGD with optional global L2-norm clipping. Non-trainable parameters
/// are skipped. Gradients are zeroed after the step.
struct Sgd {
  double learning_rate = 0.1;
  double clip_norm = 5.0;  // <= 0 disables clipping

  /// Returns the pre-clipping global gradient norm.
  double step(ParameterStore& store) const {
    double sq = 0.0;
    for (const auto& [_, p] : store)
      if (p.trainable)
        for (double g : p.grad.data) sq += g * g;
    const double norm = std::sqrt(sq);
    const double factor = (clip_norm > 0 && norm > clip_norm) ? clip_norm / norm : 1.0;
    for (auto& [_, p] : store) {
      if (p.trainable && norm > 0) {
        for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= learning_rate * factor * p.grad[i];
        ++p.updates;
      }
      p.grad.fill(0.0);
    }
    return norm;
  }
};

/// Compare analytic gradients against central differences
/// (f(x+eps) - f(x-eps)) / 2eps for every entry of every parameter in the
/// store. Returns max |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
/// The builder must rebuild the same scalar loss from the store on every call.
inline double gradient_check(const std::function<Expr(Graph&)>& builder, ParameterStore& store,
                             double epsilon = 1e-5) {
  if (store.entry_count() == 0) throw GraphError("gradient_check: no parameters to check");

  auto eval = [&] {
    Graph g;
    Expr loss = builder(g);
    const Tensor& v = g.value(loss);
    if (v.size() != 1) throw GraphError("gradient_check: loss must be a scalar, got " + v.shape_string());
    return v[0];
  };

  store.zero_grad();
  Graph first;
  Expr loss = builder(first);
  const double again = eval();
  const double once = first.value(loss)[0];
  if (std::memcmp(&once, &again, sizeof(double)) != 0)
    throw GraphError("gradient_check: builder is not deterministic (two forward passes disagree)");
  first.backward(loss);

  double worst = 0.0;
  for (auto& [name, p] : store) {
    const Tensor analytic = p.grad;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + epsilon;
      const double plus = eval();
      p.value[i] = saved - epsilon;
      const double minus = eval();
      p.value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double err = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace easyfirst
