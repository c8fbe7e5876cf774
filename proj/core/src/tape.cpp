#include "mogat/tape.hpp"

#include "mogat/error.hpp"

namespace mogat {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::leaf(Tensor value) {
  if (!value.all_finite()) throw NumericError("Tape::leaf: non-finite value");
  nodes_.push_back({std::move(value), {}, true, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("Tape::constant: non-finite value");
  nodes_.push_back({std::move(value), {}, false, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  if (!value.all_finite()) throw NumericError("non-finite value produced by a forward operation");
  bool needs = false;
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw Error("Tape::record: input belongs to another tape");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back({std::move(value), {}, needs, needs ? std::move(backward) : Backward{}});
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::grad(std::size_t id) const { return nodes_[id].grad; }

Tensor& Tape::grad_slot(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor(node.value.rows(), node.value.cols(), 0.0);
  return node.grad;
}

void Tape::accumulate_grad(std::size_t id, const Tensor& g) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (node.grad.empty()) node.grad = g;
  else node.grad.accumulate(g);
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw Error("Tape::backward: loss belongs to another tape");
  if (backward_done_) throw Error("Tape::backward: already run on this tape");
  const Tensor& v = nodes_[loss.id()].value;
  if (v.size() != 1) throw ShapeError("Tape::backward: loss must be a scalar");
  backward_done_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Tensor(v.rows(), v.cols(), 1.0);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    // Closures only touch input nodes, which precede this one; the node
    // vector does not grow during the sweep, so the reference stays valid.
    if (node.backward && !node.grad.empty()) node.backward(*this, node.value, node.grad);
  }
  // Leaves off every path to the loss still report a zero gradient.
  for (Node& node : nodes_)
    if (node.requires_grad && !node.backward && node.grad.empty())
      node.grad = Tensor(node.value.rows(), node.value.cols(), 0.0);
}

}  // namespace mogat
