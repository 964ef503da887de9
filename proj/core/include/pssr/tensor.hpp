#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pssr::ad {

// One node of a reverse-mode tape. Built on the fly by the op functions in
// ops.hpp; backward_fn pushes this node's grad into its parents' grads.
struct TensorNode {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  // True when a backward pass has to reach this node (requires_grad here or
  // somewhere upstream). Ops use it to skip dead gradient branches.
  bool needs_grad = false;
  std::string name;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  int64_t size() const {
    int64_t n = 1;
    for (int e : shape) n *= e;
    return n;
  }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Value-semantic handle to a graph node (shared ownership keeps the tape
// alive as long as any output referencing it lives).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double fill, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool valid() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int64_t size() const { return node_->size(); }

  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }
  double item() const;

  std::vector<double>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  const std::vector<double>& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }

  bool requires_grad() const { return node_->requires_grad; }
  // Leaf-only toggle; ops recompute needs_grad for interior nodes they build.
  void set_requires_grad(bool rg) {
    node_->requires_grad = rg;
    node_->needs_grad = rg;
  }

  const std::string& name() const { return node_->name; }
  Tensor& set_name(std::string n) {
    node_->name = std::move(n);
    return *this;
  }

  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  // Reverse-mode sweep from a scalar node. Accumulates (+=) into leaf grads,
  // so two backward calls sum their contributions.
  void backward();

  std::shared_ptr<TensorNode>& node() { return node_; }
  const std::shared_ptr<TensorNode>& node() const { return node_; }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

int64_t shape_size(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

}  // namespace pssr::ad
