#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvr/nn/optim.hpp"
#include "lvr/rng.hpp"

namespace lvr::nn {

enum class LayerKind : std::uint8_t {
  conv2d = 0,
  dense = 1,
  relu = 2,
  sigmoid = 3,
  downsample2 = 4,
  upsample2 = 5,
  flatten = 6,
  unflatten = 7,
};

enum class InitScheme : std::uint8_t { he = 0, glorot = 1, zero = 2 };

std::string to_string(LayerKind kind);

/// One layer of a sequential stack. Field meaning depends on kind:
///   conv2d     in/out channels, kernel (odd), stride (1 or 2)
///   dense      in/out units
///   upsample2  height/width of the output (2x input, or 2x-1 for odd mirrors)
///   unflatten  out channels, height, width
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::uint32_t in = 0;
  std::uint32_t out = 0;
  std::uint32_t kernel = 0;
  std::uint32_t stride = 1;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  InitScheme init = InitScheme::he;

  static LayerSpec conv2d(std::uint32_t in, std::uint32_t out, std::uint32_t kernel = 3,
                          std::uint32_t stride = 1, InitScheme init = InitScheme::he);
  static LayerSpec dense(std::uint32_t in, std::uint32_t out, InitScheme init = InitScheme::glorot);
  static LayerSpec relu() { return {LayerKind::relu}; }
  static LayerSpec sigmoid() { return {LayerKind::sigmoid}; }
  static LayerSpec downsample2() { return {LayerKind::downsample2}; }
  static LayerSpec upsample2(std::uint32_t height, std::uint32_t width);
  static LayerSpec flatten() { return {LayerKind::flatten}; }
  static LayerSpec unflatten(std::uint32_t channels, std::uint32_t height, std::uint32_t width);

  bool has_parameters() const noexcept {
    return kind == LayerKind::conv2d || kind == LayerKind::dense;
  }
  std::size_t parameter_count() const;

  /// Throws ConfigError for malformed hyperparameters.
  void validate() const;

  /// Per-sample output shape for a per-sample input shape; throws ShapeError.
  Shape output_shape(const Shape& input) const;

  bool operator==(const LayerSpec&) const = default;
};

/// Total trainable element count of a layer table.
std::size_t count_parameters(const std::vector<LayerSpec>& layers);

/// A chain of layers with owned parameters. Input and output carry a leading
/// batch axis on top of the per-sample shapes.
template <typename T>
class Sequential {
 public:
  Sequential() = default;

  /// Validates the chain against the per-sample input shape and initializes
  /// parameters from rng (biases start at zero).
  Sequential(std::vector<LayerSpec> layers, Shape input_shape, Rng& rng);

  /// Copies are deep: the copy owns fresh parameter nodes.
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  Var<T> forward(Tape<T>& tape, Var<T> x) const;

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const noexcept { return output_shape_; }

  /// Parameters in declaration order (weight then bias per layer), named
  /// "<prefix><layer index>.weight" / ".bias".
  std::vector<Parameter<T>> parameters(const std::string& prefix = "") const;

 private:
  std::vector<LayerSpec> layers_;
  Shape input_shape_;
  Shape output_shape_;
  std::vector<std::vector<Var<T>>> params_;
};

extern template class Sequential<float>;
extern template class Sequential<double>;

}  // namespace lvr::nn
