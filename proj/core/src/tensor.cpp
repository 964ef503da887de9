#include "pssr/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace pssr::ad {

int64_t shape_size(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int e : shape) {
    if (e <= 0) throw std::invalid_argument("tensor: non-positive extent in shape " + shape_str(shape));
    n *= e;
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double fill, bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  int64_t count = shape_size(shape);
  n->shape = std::move(shape);
  n->value.assign(static_cast<size_t>(count), fill);
  n->requires_grad = requires_grad;
  n->needs_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
  int64_t count = shape_size(shape);
  if (count != static_cast<int64_t>(values.size()))
    throw std::invalid_argument("tensor: shape " + shape_str(shape) + " wants " +
                                std::to_string(count) + " values, got " +
                                std::to_string(values.size()));
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  n->needs_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("tensor: item() on non-scalar " + shape_str(shape()));
  return node_->value[0];
}

void Tensor::backward() {
  if (!node_) throw std::invalid_argument("backward: empty tensor");
  if (size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(shape()));

  // Iterative post-order DFS for a deterministic topological order.
  std::vector<TensorNode*> topo;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next_child] = stack.back();
    if (next_child < n->parents.size()) {
      TensorNode* p = n->parents[next_child].get();
      ++next_child;
      if (p->needs_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      topo.push_back(n);
      stack.pop_back();
    }
  }

  for (TensorNode* n : topo) n->ensure_grad();
  node_->grad[0] += 1.0;

  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

}  // namespace pssr::ad
