#pragma once

#include <cstdint>
#include <span>

#include "lvr/nn/autograd.hpp"

namespace lvr::nn {

/// Lower clamp applied to BCE predictions (upper clamp is 1 - kBceClip).
inline constexpr double kBceClip = 1e-7;

/// Spatial output extent of a "same"-padded convolution with the given stride.
constexpr std::size_t strided_extent(std::size_t extent, std::size_t stride) {
  return (extent + stride - 1) / stride;
}

// --- layers -----------------------------------------------------------------

/// 2-D cross-correlation with zero "same" padding (pad = k/2 on each side).
/// input [N,C,H,W], kernel [F,C,kh,kw] (kh, kw odd), bias [F].
/// Output [N,F,ceil(H/stride),ceil(W/stride)]; output (i,j) is centred on
/// input (i*stride, j*stride).
template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& input, const Var<T>& kernel, const Var<T>& bias,
              std::size_t stride = 1);

/// input [N,Din], weight [Dout,Din], bias [Dout] -> input * weight^T + bias.
template <typename T>
Var<T> dense(Tape<T>& tape, const Var<T>& input, const Var<T>& weight, const Var<T>& bias);

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> sigmoid(Tape<T>& tape, const Var<T>& x);

/// Keeps every second row and column: [N,C,H,W] -> [N,C,ceil(H/2),ceil(W/2)].
template <typename T>
Var<T> downsample2(Tape<T>& tape, const Var<T>& x);

/// Nearest-neighbour x2 upsampling to [N,C,out_h,out_w]; out_h must be 2H or
/// 2H-1 (the latter trims the last row so odd extents mirror downsample2).
template <typename T>
Var<T> upsample2(Tape<T>& tape, const Var<T>& x, std::size_t out_h, std::size_t out_w);

/// Reinterprets the data under a new shape (flatten / unflatten).
template <typename T>
Var<T> reshape(Tape<T>& tape, const Var<T>& x, Shape shape);

// --- elementwise / reductions -----------------------------------------------

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> mul(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

/// a + scale * b.
template <typename T>
Var<T> add_scaled(Tape<T>& tape, const Var<T>& a, const Var<T>& b, T scale);

/// Sum of all elements, shape [1].
template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x);

// --- losses -----------------------------------------------------------------

/// Mean binary cross-entropy over all elements. Predictions are clamped to
/// [kBceClip, 1 - kBceClip]; the clamp has zero gradient where active.
template <typename T>
Var<T> bce_loss(Tape<T>& tape, const Var<T>& prediction, const Tensor<T>& target);

/// Batch mean of 0.5 * sum(mu^2 + exp(log_var) - 1 - log_var) for [N,n] inputs.
template <typename T>
Var<T> kl_unit_normal(Tape<T>& tape, const Var<T>& mu, const Var<T>& log_var);

/// z = mu + exp(0.5 * log_var) * eps, with eps a constant of the same shape.
template <typename T>
Var<T> reparameterize(Tape<T>& tape, const Var<T>& mu, const Var<T>& log_var,
                      const Tensor<T>& eps);

/// Row-wise Euclidean distance between [N,D] inputs -> [N]. The subgradient
/// at zero distance is zero.
template <typename T>
Var<T> pair_distance(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

/// Mean over pairs of (1-y)/2 d^2 + y/2 max(0, m-d)^2 with y=0 similar and
/// y=1 dissimilar. distances is [N]; labels must hold N values in {0,1}.
template <typename T>
Var<T> contrastive_loss(Tape<T>& tape, const Var<T>& distances, std::span<const std::uint8_t> labels,
                        T margin);

/// Scalar form of the contrastive loss for one pair.
double contrastive_loss(double distance, int label, double margin);

}  // namespace lvr::nn
