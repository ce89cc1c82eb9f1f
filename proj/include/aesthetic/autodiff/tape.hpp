#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aesthetic/autodiff/tensor.hpp"

namespace aesthetic {

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <typename T>
class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; valid while the tape
/// lives and has not been cleared.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Shape& shape() const { return tape_->node(id_).shape; }
  std::size_t numel() const { return tape_->node(id_).value.size(); }
  std::span<const T> value() const { return tape_->node(id_).value; }
  std::span<const T> grad() const { return tape_->node(id_).grad; }
  bool requires_grad() const { return tape_->node(id_).requires_grad; }

  T item() const {
    if (numel() != 1) throw ShapeError("item() on non-scalar " + shape_str(shape()));
    return value()[0];
  }

  BasicTensor<T> to_tensor() const {
    const auto v = value();
    return BasicTensor<T>(shape(), std::vector<T>(v.begin(), v.end()));
  }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run record of executed operations. Node ids increase in
/// execution order, so every node's inputs have smaller ids than the node.
template <typename T>
class Tape {
 public:
  /// Accumulates the node's gradient into the gradients of its inputs.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  struct Node {
    const char* op = "leaf";
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    BasicTensor<T>* bound = nullptr;
    bool requires_grad = false;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Shape shape, std::vector<T> value) {
    check_leaf(shape, value);
    Node n;
    n.op = "constant";
    n.shape = std::move(shape);
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var<T>(this, nodes_.size() - 1);
  }

  Var<T> constant(const BasicTensor<T>& t) { return constant(t.shape, t.data); }

  /// Binds a parameter tensor. After backward() the node gradient is added
  /// into `param.grad`.
  Var<T> parameter(BasicTensor<T>& param) {
    check_leaf(param.shape, param.data);
    Node n;
    n.op = "parameter";
    n.shape = param.shape;
    n.value = param.data;
    n.requires_grad = param.requires_grad;
    n.bound = param.requires_grad ? &param : nullptr;
    nodes_.push_back(std::move(n));
    return Var<T>(this, nodes_.size() - 1);
  }

  /// Appends the result of an operation. Throws NumericError if the value
  /// contains NaN/Inf.
  Var<T> record(const char* op, Shape shape, std::vector<T> value,
                std::vector<std::size_t> inputs, BackwardFn backward) {
    if (shape_numel(shape) != value.size()) {
      throw ShapeError(std::string(op) + ": value length does not match shape " +
                       shape_str(shape));
    }
    if (!all_finite(value)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
    Node n;
    n.op = op;
    n.shape = std::move(shape);
    n.value = std::move(value);
    for (std::size_t in : inputs) {
      if (in >= nodes_.size()) throw TapeError(std::string(op) + ": dangling input");
      n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
    }
    n.inputs = std::move(inputs);
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var<T>(this, nodes_.size() - 1);
  }

  Node& node(std::size_t id) { return nodes_.at(id); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Gradient buffer of an input inside a backward function, or nullptr when
  /// that input does not need a gradient.
  T* grad_sink(std::size_t id) {
    Node& n = nodes_[id];
    return n.requires_grad ? n.grad.data() : nullptr;
  }

  // Exposed for tests that build malformed tapes.
  std::vector<Node>& nodes() { return nodes_; }

 private:
  static void check_leaf(const Shape& shape, const std::vector<T>& value) {
    if (shape_numel(shape) != value.size()) {
      throw ShapeError("leaf value length does not match shape " + shape_str(shape));
    }
    if (!all_finite(value)) throw NumericError("leaf tensor contains a non-finite value");
  }

  std::vector<Node> nodes_;
};

/// Reverse pass from a scalar loss. Every node that requires a gradient ends
/// with a gradient buffer (zero if it does not influence the loss), and bound
/// parameters accumulate their gradient.
template <typename T>
void backward(Var<T> loss) {
  Tape<T>& tape = loss.tape();
  if (loss.numel() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  auto& nodes = tape.nodes();
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    for (std::size_t in : nodes[id].inputs) {
      if (in >= id) throw TapeError("tape is not topologically ordered (cycle at node " +
                                    std::to_string(id) + ")");
    }
  }
  for (auto& n : nodes) {
    if (n.requires_grad) n.grad.assign(n.value.size(), T(0));
  }
  auto& root = nodes[loss.id()];
  if (!root.requires_grad) return;
  root.grad[0] = T(1);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    auto& n = nodes[id];
    if (!n.requires_grad) continue;
    if (n.backward) n.backward(tape, id);
  }
  for (auto& n : nodes) {
    if (n.bound == nullptr) continue;
    auto& g = n.bound->grad;
    if (g.size() != n.grad.size()) g.assign(n.grad.size(), T(0));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  }
}

}  // namespace aesthetic
