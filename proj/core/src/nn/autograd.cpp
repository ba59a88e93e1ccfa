#include "lvr/nn/autograd.hpp"

#include <algorithm>

#include "lvr/error.hpp"

namespace lvr::nn {

template <typename T>
Var<T> Tape<T>::emit(Tensor<T> value, std::vector<Var<T>> parents,
                     std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  if (!recording()) return node;
  node->requires_grad = std::any_of(parents.begin(), parents.end(),
                                    [](const Var<T>& p) { return p && p->requires_grad; });
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
    nodes_.push_back(node);
  }
  return node;
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss) {
  if (!recording()) throw Error("backward() called on an inference tape");
  if (backward_done_) throw Error("backward() already ran on this tape; call reset() first");
  if (!loss || loss->value.size() != 1) {
    throw ShapeError("backward() needs a single-element loss, got " +
                     (loss ? shape_string(loss->value.shape()) : std::string("null")));
  }
  backward_done_ = true;
  if (!loss->requires_grad) return;

  for (auto& node : nodes_) {
    node->ensure_grad();
    for (auto& p : node->parents) {
      if (p && p->requires_grad) p->ensure_grad();
    }
  }
  loss->ensure_grad()[0] += T{1};

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node<T>& node = **it;
    if (node.backward_fn) node.backward_fn(node);
  }
}

template <typename T>
void Tape<T>::reset() {
  nodes_.clear();
  backward_done_ = false;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace lvr::nn
