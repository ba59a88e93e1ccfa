#include "lvr/nn/layers.hpp"

#include <cmath>

#include "lvr/error.hpp"
#include "lvr/nn/ops.hpp"

namespace lvr::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::dense: return "dense";
    case LayerKind::relu: return "relu";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::downsample2: return "downsample2";
    case LayerKind::upsample2: return "upsample2";
    case LayerKind::flatten: return "flatten";
    case LayerKind::unflatten: return "unflatten";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv2d(std::uint32_t in, std::uint32_t out, std::uint32_t kernel,
                            std::uint32_t stride, InitScheme init) {
  LayerSpec s{LayerKind::conv2d, in, out, kernel, stride};
  s.init = init;
  return s;
}

LayerSpec LayerSpec::dense(std::uint32_t in, std::uint32_t out, InitScheme init) {
  LayerSpec s{LayerKind::dense, in, out};
  s.init = init;
  return s;
}

LayerSpec LayerSpec::upsample2(std::uint32_t height, std::uint32_t width) {
  LayerSpec s{LayerKind::upsample2};
  s.height = height;
  s.width = width;
  return s;
}

LayerSpec LayerSpec::unflatten(std::uint32_t channels, std::uint32_t height, std::uint32_t width) {
  LayerSpec s{LayerKind::unflatten};
  s.out = channels;
  s.height = height;
  s.width = width;
  return s;
}

std::size_t LayerSpec::parameter_count() const {
  switch (kind) {
    case LayerKind::conv2d:
      return std::size_t{in} * out * kernel * kernel + out;
    case LayerKind::dense:
      return std::size_t{in} * out + out;
    default:
      return 0;
  }
}

void LayerSpec::validate() const {
  const auto fail = [this](const std::string& why) {
    throw ConfigError(to_string(kind) + " layer: " + why);
  };
  switch (kind) {
    case LayerKind::conv2d:
      if (in == 0 || out == 0) fail("channel counts must be positive");
      if (kernel == 0 || kernel % 2 == 0) fail("kernel must be odd and >= 1");
      if (stride != 1 && stride != 2) fail("stride must be 1 or 2");
      break;
    case LayerKind::dense:
      if (in == 0 || out == 0) fail("unit counts must be positive");
      break;
    case LayerKind::upsample2:
      if (height == 0 || width == 0) fail("output extents must be positive");
      break;
    case LayerKind::unflatten:
      if (out == 0 || height == 0 || width == 0) fail("extents must be positive");
      break;
    case LayerKind::relu:
    case LayerKind::sigmoid:
    case LayerKind::downsample2:
    case LayerKind::flatten:
      break;
    default:
      fail("unknown layer kind");
  }
}

Shape LayerSpec::output_shape(const Shape& input) const {
  validate();
  const auto need_rank = [&](std::size_t r) {
    if (input.size() != r) {
      throw ShapeError(to_string(kind) + " layer expects rank-" + std::to_string(r) +
                       " samples, got " + shape_string(input));
    }
  };
  switch (kind) {
    case LayerKind::conv2d:
      need_rank(3);
      if (input[0] != in) {
        throw ShapeError("conv2d layer expects " + std::to_string(in) + " channels, got " +
                         shape_string(input));
      }
      return {out, strided_extent(input[1], stride), strided_extent(input[2], stride)};
    case LayerKind::dense:
      need_rank(1);
      if (input[0] != in) {
        throw ShapeError("dense layer expects " + std::to_string(in) + " inputs, got " +
                         shape_string(input));
      }
      return {out};
    case LayerKind::relu:
    case LayerKind::sigmoid:
      return input;
    case LayerKind::downsample2:
      need_rank(3);
      return {input[0], strided_extent(input[1], 2), strided_extent(input[2], 2)};
    case LayerKind::upsample2: {
      need_rank(3);
      const auto ok = [](std::size_t from, std::size_t to) {
        return to == 2 * from || to + 1 == 2 * from;
      };
      if (!ok(input[1], height) || !ok(input[2], width)) {
        throw ShapeError("upsample2 cannot map " + shape_string(input) + " to " +
                         std::to_string(height) + "x" + std::to_string(width));
      }
      return {input[0], height, width};
    }
    case LayerKind::flatten:
      return {shape_size(input)};
    case LayerKind::unflatten: {
      Shape outs{out, height, width};
      if (shape_size(outs) != shape_size(input)) {
        throw ShapeError("unflatten to " + shape_string(outs) + " from " + shape_string(input));
      }
      return outs;
    }
  }
  throw ShapeError("unknown layer kind");
}

std::size_t count_parameters(const std::vector<LayerSpec>& layers) {
  std::size_t total = 0;
  for (const auto& l : layers) total += l.parameter_count();
  return total;
}

namespace {

template <typename T>
Tensor<T> init_weights(Shape shape, std::size_t fan_in, std::size_t fan_out, InitScheme scheme,
                       Rng& rng) {
  Tensor<T> w(std::move(shape));
  if (scheme == InitScheme::zero) return w;
  const double limit = scheme == InitScheme::he
                           ? std::sqrt(6.0 / static_cast<double>(fan_in))
                           : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-limit, limit));
  return w;
}

}  // namespace

template <typename T>
Sequential<T>::Sequential(std::vector<LayerSpec> layers, Shape input_shape, Rng& rng)
    : layers_(std::move(layers)), input_shape_(std::move(input_shape)) {
  Shape shape = input_shape_;
  params_.reserve(layers_.size());
  for (const auto& l : layers_) {
    shape = l.output_shape(shape);
    std::vector<Var<T>> p;
    if (l.kind == LayerKind::conv2d) {
      const std::size_t k2 = std::size_t{l.kernel} * l.kernel;
      p.push_back(make_leaf(init_weights<T>({l.out, l.in, l.kernel, l.kernel}, l.in * k2,
                                            l.out * k2, l.init, rng),
                            true));
      p.push_back(make_leaf(Tensor<T>({l.out}), true));
    } else if (l.kind == LayerKind::dense) {
      p.push_back(make_leaf(init_weights<T>({l.out, l.in}, l.in, l.out, l.init, rng), true));
      p.push_back(make_leaf(Tensor<T>({l.out}), true));
    }
    params_.push_back(std::move(p));
  }
  output_shape_ = shape;
}

template <typename T>
Sequential<T>::Sequential(const Sequential& other)
    : layers_(other.layers_), input_shape_(other.input_shape_), output_shape_(other.output_shape_) {
  params_.reserve(other.params_.size());
  for (const auto& layer : other.params_) {
    std::vector<Var<T>> copy;
    for (const auto& v : layer) copy.push_back(make_leaf(v->value, v->requires_grad));
    params_.push_back(std::move(copy));
  }
}

template <typename T>
Sequential<T>& Sequential<T>::operator=(const Sequential& other) {
  if (this != &other) *this = Sequential(other);
  return *this;
}

template <typename T>
Var<T> Sequential<T>::forward(Tape<T>& tape, Var<T> x) const {
  const auto& xs = x->value.shape();
  Shape sample(xs.begin() + (xs.empty() ? 0 : 1), xs.end());
  if (xs.empty() || sample != input_shape_) {
    throw ShapeError("sequential input " + shape_string(xs) + " does not match [N]+" +
                     shape_string(input_shape_));
  }
  const std::size_t batch = xs[0];
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const auto& p = params_[i];
    switch (l.kind) {
      case LayerKind::conv2d: x = conv2d(tape, x, p[0], p[1], l.stride); break;
      case LayerKind::dense: x = dense(tape, x, p[0], p[1]); break;
      case LayerKind::relu: x = relu(tape, x); break;
      case LayerKind::sigmoid: x = sigmoid(tape, x); break;
      case LayerKind::downsample2: x = downsample2(tape, x); break;
      case LayerKind::upsample2: x = upsample2(tape, x, l.height, l.width); break;
      case LayerKind::flatten: x = reshape(tape, x, {batch, x->value.size() / batch}); break;
      case LayerKind::unflatten: x = reshape(tape, x, {batch, l.out, l.height, l.width}); break;
    }
  }
  return x;
}

template <typename T>
std::vector<Parameter<T>> Sequential<T>::parameters(const std::string& prefix) const {
  std::vector<Parameter<T>> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].empty()) continue;
    out.push_back({prefix + std::to_string(i) + ".weight", params_[i][0]});
    out.push_back({prefix + std::to_string(i) + ".bias", params_[i][1]});
  }
  return out;
}

template class Sequential<float>;
template class Sequential<double>;

}  // namespace lvr::nn
