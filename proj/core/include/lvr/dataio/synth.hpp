#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lvr/dataio/corpus.hpp"

namespace lvr::dataio {

/// Row-major colour matrix of the white-light -> narrow-band stand-in:
/// out_rgb = M * in_rgb, then clamp. Red is suppressed; green and blue keep
/// most of their own energy. Rows sum to <= 1 so in-range inputs never clip.
inline constexpr std::array<float, 9> kNbiColorMatrix = {
    0.35f, 0.05f, 0.05f,  //
    0.20f, 0.70f, 0.05f,  //
    0.15f, 0.10f, 0.70f,  //
};

/// Applies kNbiColorMatrix per pixel and clamps to [0,1].
Image modality_transform(const Image& frame);

/// Bilinear rotation by theta degrees about the image centre. Samples that
/// fall outside the source read as black.
Image rotate_frame(const Image& frame, double theta_deg);

struct SynthConfig {
  std::uint32_t n_clusters = 100;
  std::uint32_t frames_per_cluster = 10;
  std::uint32_t image_size = 64;
  /// Candidate view angles; empty means uniform in [0, 360).
  std::vector<double> rotation_angles = {0, 45, 90, 135, 180, 225, 270, 315};
  double modality_fraction = 0.2;
  /// Seeds the per-cluster base textures.
  std::uint64_t seed = 1;
  /// Selects the rotation/modality draw for each frame. Corpora sharing a
  /// seed but differing in visit show the same sites under new views.
  std::uint32_t visit = 0;

  void validate() const;
};

/// Deterministic base texture of one cluster at size x size.
Image render_base(std::uint64_t seed, std::int64_t cluster_id, std::uint32_t size);

/// n_clusters * frames_per_cluster labeled frames, 8-bit quantized, sorted by
/// id ("v<visit>_c<cluster>_f<index>").
FrameCorpus generate_synthetic(const SynthConfig& config);

struct PairSample {
  std::string a;
  std::string b;
  std::uint8_t y = 0;  // 0 similar (same cluster), 1 dissimilar

  bool operator==(const PairSample&) const = default;
};

/// round(n_pairs * similar_fraction) same-cluster pairs of distinct frames,
/// the rest cross-cluster, shuffled. Requires a labeled corpus with at least
/// two clusters (and a cluster of size >= 2 when similar pairs are needed).
std::vector<PairSample> sample_pairs(const FrameCorpus& corpus, std::size_t n_pairs,
                                     double similar_fraction, std::uint64_t seed);

}  // namespace lvr::dataio
