#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ggcam/tensor.hpp"

namespace ggcam {

struct Node;
using Value = std::shared_ptr<Node>;

// One node in the reverse-mode tape. `backprop` reads this node's grad and
// accumulates into the parents' grads; it is invoked exactly once per node,
// in reverse topological order.
struct Node {
  Tensor value;
  Tensor grad;  // same shape as value; allocated on demand by backward()
  bool requires_grad = false;
  std::vector<Value> parents;
  std::function<void(Node&)> backprop;

  explicit Node(Tensor v) : value(std::move(v)) {}
};

// Leaf that participates in gradient computation (a trainable parameter).
Value leaf(Tensor v);
// Constant input; gradients do not flow into it.
Value constant(Tensor v);

// Reverse-mode sweep from a scalar-valued root. Grads of every node
// reachable from the root are (re)computed from scratch; gradients
// accumulate additively across fan-out. Leaves not on any path from the
// root keep a zero grad tensor.
void backward(const Value& root);

}  // namespace ggcam
