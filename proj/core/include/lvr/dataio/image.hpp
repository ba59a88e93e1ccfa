#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lvr/nn/tensor.hpp"

namespace lvr::dataio {

/// RGB frame, row-major HWC with values in [0,1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), pixels(h * w * 3, fill) {}

  float& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * 3 + c];
  }
  bool empty() const noexcept { return pixels.empty(); }

  bool operator==(const Image&) const = default;
};

/// Rounds to the nearest 8-bit level and back (v -> round(255 v) / 255).
Image quantize8(const Image& img);

/// 8-bit codec helpers. Decoding normalizes to [0,1]; encoding rounds to
/// the nearest of 256 levels after clamping.
Image decode_image(const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path);
void write_ppm(const Image& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Image& img);

/// Antialiased separable resize (triangle filter widened by the scale factor
/// when shrinking, plain bilinear when growing). Identity when sizes match.
Image resize(const Image& img, std::size_t height, std::size_t width);

/// Resizes to (height, width) and appends the frame to a CHW float buffer.
void append_chw(const Image& img, std::size_t height, std::size_t width, std::vector<float>& out);

/// Stacks frames into an [N,3,H,W] tensor at the requested resolution.
nn::Tensor<float> to_batch(std::span<const Image* const> frames, std::size_t height,
                           std::size_t width);

/// Inverse of to_batch for one sample: [3,H,W] slice of a batch -> Image.
Image from_chw(std::span<const float> chw, std::size_t height, std::size_t width);

/// Mean absolute difference over all channels. Sizes must match.
double mean_abs_diff(const Image& a, const Image& b);

}  // namespace lvr::dataio
