#include "dkg/tensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "dkg/error.hpp"

namespace dkg::tensor {
namespace {

thread_local bool g_recording = true;

}  // namespace

std::size_t numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

NoGradGuard::NoGradGuard() noexcept : previous_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = previous_; }
bool NoGradGuard::recording() noexcept { return g_recording; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0f, requires_grad); }

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  const std::size_t n = tensor::numel(shape);
  return from_data(std::move(shape), std::vector<float>(n, value), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
  if (tensor::numel(shape) != data.size()) {
    throw Error(ErrorCode::InvalidShape, "shape " + shape_string(shape) + " does not hold " +
                                             std::to_string(data.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(float value, bool requires_grad) { return from_data({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const {
  if (!node_) throw Error(ErrorCode::InvalidShape, "undefined tensor");
  return node_->shape;
}

std::span<const float> Tensor::data() const {
  if (!node_) throw Error(ErrorCode::InvalidShape, "undefined tensor");
  return node_->data;
}

std::span<float> Tensor::mutable_data() {
  if (!node_) throw Error(ErrorCode::InvalidShape, "undefined tensor");
  return node_->data;
}

float Tensor::item() const {
  if (numel() != 1) throw Error(ErrorCode::NotScalar, "item() on tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

std::span<const float> Tensor::grad() const {
  if (!has_grad()) throw Error(ErrorCode::MissingGradient, "tensor has no gradient");
  return node_->grad;
}

std::span<float> Tensor::mutable_grad() {
  if (!node_) throw Error(ErrorCode::InvalidShape, "undefined tensor");
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const { return from_data(shape(), node_->data, false); }

Tensor Tensor::clone() const { return from_data(shape(), node_->data, requires_grad()); }

void Tensor::backward() const {
  if (!node_) throw Error(ErrorCode::StaleTape, "backward on undefined tensor");
  if (node_->data.size() != 1) {
    throw Error(ErrorCode::NotScalar, "backward needs a scalar loss, got " + shape_string(node_->shape));
  }
  if (node_->consumed) throw Error(ErrorCode::StaleTape, "backward already ran on this loss; re-run forward");
  if (!node_->requires_grad) throw Error(ErrorCode::StaleTape, "loss has no recorded operations");

  // Iterative post-order DFS; reversed it is a valid reverse-topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
  // Release the tape: interior nodes drop their closures, parents and grads.
  for (detail::Node* n : order) {
    if (n->backward_fn) {
      n->backward_fn = nullptr;
      n->parents.clear();
      if (n != node_.get()) n->grad.clear();
    }
  }
  node_->consumed = true;
}

namespace detail {

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) noexcept {
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor make_output(Shape shape, std::vector<float> data, std::initializer_list<const Tensor*> inputs,
                   std::function<void(Node&)> fn, const char* op_name) {
  for (float v : data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, std::string(op_name) + " produced a non-finite value");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  if (NoGradGuard::recording() && any_requires_grad(inputs)) {
    node->requires_grad = true;
    for (const Tensor* t : inputs) node->parents.push_back(t->node());
    node->backward_fn = std::move(fn);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

}  // namespace dkg::tensor
