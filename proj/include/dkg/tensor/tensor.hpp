#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dkg::tensor {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

class Tensor;

namespace detail {

// One vertex of the recorded computation. Leaves are parameters or inputs;
// interior nodes carry the closure that propagates their gradient to parents.
struct Node {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
  bool consumed = false;  // set on a loss after backward has run through it
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0f);
  }
};

}  // namespace detail

/// Disables recording for its lifetime on the current thread (inference).
class NoGradGuard {
 public:
  NoGradGuard() noexcept;
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool recording() noexcept;

 private:
  bool previous_;
};

/// Shared handle to an N-d float32 array that may participate in the
/// gradient tape. Copies alias the same storage, as with parameters in most
/// frameworks; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t i) const { return shape().at(i); }
  std::size_t numel() const { return node_ ? node_->data.size() : 0; }

  std::span<const float> data() const;
  std::span<float> mutable_data();
  float item() const;

  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  bool has_grad() const noexcept { return node_ && !node_->grad.empty(); }
  std::span<const float> grad() const;
  std::span<float> mutable_grad();
  void zero_grad();

  /// Same values, no history.
  Tensor detach() const;
  Tensor clone() const;

  /// Reverse-mode sweep from this scalar. Gradients accumulate into every
  /// reachable leaf with requires_grad; interior history is released.
  void backward() const;

  const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) noexcept : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

namespace detail {

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) noexcept;

/// Wraps a freshly computed buffer as an op output. When recording is on and
/// some input needs a gradient, the output joins the tape with `fn`.
Tensor make_output(Shape shape, std::vector<float> data, std::initializer_list<const Tensor*> inputs,
                   std::function<void(Node&)> fn, const char* op_name);

}  // namespace detail

}  // namespace dkg::tensor
