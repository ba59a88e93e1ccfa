#include "lvr/nn/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "lvr/error.hpp"

namespace lvr::nn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  for (auto e : shape_) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape_));
  }
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto e : shape_) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape_));
  }
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("tensor shape " + shape_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " elements");
  }
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace lvr::nn
