#pragma once

// Reverse-mode differentiation over a per-step tape. Nodes are appended in
// evaluation order, so walking the tape backwards is a valid topological
// order and gradient accumulation order is fixed.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "meder/errors.hpp"
#include "meder/num/tensor.hpp"

namespace meder::num {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() {
    if (grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
    else grad.fill(T{0});
  }
};

template <typename T>
class Tape;

/// Handle to a tape node.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(id); }
  const Shape& shape() const { return value().shape(); }
};

template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> v) {
    Node n;
    n.own = std::move(v);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  /// Leaf that reads the parameter in place and accumulates into its grad.
  Var<T> param(Parameter<T>& p) {
    Node n;
    n.external = &p.value;
    n.param = &p;
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  /// Appends an operation result. `fn` receives the tape and the new node id
  /// and must add its contribution to each parent's grad.
  Var<T> record(Tensor<T> value, const std::vector<std::size_t>& parents, BackwardFn fn) {
    Node n;
    n.own = std::move(value);
    for (std::size_t p : parents) n.requires_grad = n.requires_grad || nodes_.at(p).requires_grad;
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  const Tensor<T>& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.external ? *n.external : n.own;
  }

  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Gradient slot, allocated as zeros on first use.
  Tensor<T>& grad(std::size_t id) {
    Node& n = nodes_.at(id);
    if (n.grad.size() == 0 && n.grad.shape().empty()) n.grad = Tensor<T>(value(id).shape());
    return n.grad;
  }

  bool has_grad(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return !(n.grad.size() == 0 && n.grad.shape().empty());
  }

  std::size_t size() const { return nodes_.size(); }

  void backward(Var<T> loss) {
    if (loss.tape != this) throw std::invalid_argument("backward: variable from another tape");
    if (value(loss.id).size() != 1)
      throw ShapeError("backward: loss must be scalar, got shape " + shape_str(value(loss.id).shape()));
    grad(loss.id)[0] = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !has_grad(i)) continue;
      if (n.backward) n.backward(*this, i);
      if (n.param) {
        Tensor<T>& g = n.param->grad;
        if (g.shape() != n.param->value.shape()) g = Tensor<T>(n.param->value.shape());
        const Tensor<T>& src = nodes_[i].grad;
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += src[k];
      }
    }
  }

 private:
  struct Node {
    Tensor<T> own;
    const Tensor<T>* external = nullptr;
    Tensor<T> grad;
    BackwardFn backward;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
};

}  // namespace meder::num
