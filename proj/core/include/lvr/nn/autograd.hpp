#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lvr/nn/tensor.hpp"

namespace lvr::nn {

/// A tensor participating in reverse-mode differentiation.
///
/// Leaves (inputs, parameters) are created with make_leaf and live outside
/// any tape. Interior nodes are produced by ops and recorded on a Tape in
/// creation order, which is already a topological order for backward.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until allocated
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  bool has_grad() const noexcept { return !grad.empty(); }

  /// Allocates a zero gradient buffer with the value's shape if absent.
  Tensor<T>& ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor<T>(value.shape());
    return grad;
  }

  void zero_grad() {
    if (has_grad()) grad.fill(T{0});
  }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> make_leaf(Tensor<T> value, bool requires_grad = false) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}

/// Records the operations of one forward pass. A tape in inference mode
/// records nothing and ops skip building closures, so frozen-weight forward
/// passes are allocation-light and safe to run from many threads (one tape
/// per thread).
template <typename T>
class Tape {
 public:
  enum class Mode { record, inference };

  explicit Tape(Mode mode = Mode::record) : mode_(mode) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return mode_ == Mode::record; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Creates an op output. Records it when any parent requires a gradient.
  Var<T> emit(Tensor<T> value, std::vector<Var<T>> parents,
              std::function<void(Node<T>&)> backward_fn);

  /// Propagates d(loss)/d(node) to every requires_grad node reachable from
  /// loss. Loss must be a single-element tensor. Grads accumulate into
  /// leaves, so callers zero parameter grads between steps. A second call
  /// before reset() throws.
  void backward(const Var<T>& loss);

  /// Drops recorded nodes and re-arms backward().
  void reset();

 private:
  Mode mode_;
  bool backward_done_ = false;
  std::vector<Var<T>> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace lvr::nn
