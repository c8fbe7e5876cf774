#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "mogat/tensor.hpp"

namespace mogat {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records values in creation order. Each non-leaf node carries a closure
/// that adds its output gradient into the gradients of its inputs, so a
/// reverse walk over the node list is a valid topological order.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable input; receives a gradient.
  Var leaf(Tensor value);
  /// Input that never receives a gradient.
  Var constant(Tensor value);

  /// Appends an operation result. `backward` is dropped when none of the
  /// inputs require a gradient. Throws NumericError on non-finite output.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Zero-shaped tensor when no gradient reached the node.
  const Tensor& grad(std::size_t id) const;

  /// Adds g into the gradient slot of node `id` (no-op for constants).
  void accumulate_grad(std::size_t id, const Tensor& g);
  /// Mutable gradient slot, allocated as zeros on first use.
  Tensor& grad_slot(std::size_t id);

  /// Reverse sweep from a 1x1 loss; may be called once per tape.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace mogat
