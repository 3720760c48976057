#include "ggcam/autodiff.hpp"

#include <unordered_set>

#include "ggcam/errors.hpp"

namespace ggcam {

Value leaf(Tensor v) {
  auto n = std::make_shared<Node>(std::move(v));
  n->requires_grad = true;
  n->grad = Tensor(n->value.shape());
  return n;
}

Value constant(Tensor v) {
  return std::make_shared<Node>(std::move(v));
}

namespace {

// Iterative post-order DFS; recursion depth would scale with graph size.
void topo_sort(const Value& root, std::vector<Node*>& order) {
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node* p = node->parents[next_child++].get();
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace

void backward(const Value& root) {
  if (!root || root->value.size() != 1)
    throw NumericalError("backward root must be scalar-valued");

  std::vector<Node*> order;
  topo_sort(root, order);

  for (Node* n : order) {
    n->grad = Tensor(n->value.shape());
  }
  root->grad[0] = 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

}  // namespace ggcam
