#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvr/binio.hpp"
#include "lvr/dataio/corpus.hpp"
#include "lvr/models/model.hpp"

namespace lvr::index {

enum class DType : std::uint8_t { f32 = 0, f16 = 1 };

std::string to_string(DType dtype);
DType parse_dtype(const std::string& s);
std::size_t dtype_bytes(DType dtype);

/// IEEE-754 binary16 conversion, round to nearest even.
std::uint16_t float_to_half(float value);
float half_to_float(std::uint16_t bits);
/// value -> half -> float.
float round_to_half(float value);

struct IndexEntry {
  std::string frame_id;
  std::vector<float> latent;

  bool operator==(const IndexEntry&) const = default;
};

/// Latent vectors of a corpus keyed by frame id. Entries are sorted by id;
/// an f16 index holds latents already rounded to half precision.
struct LatentIndex {
  models::ModelKind model_kind = models::ModelKind::ae;
  Digest model_checksum{};
  std::uint32_t dim = 0;
  DType dtype = DType::f32;
  std::vector<IndexEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  const IndexEntry* find(const std::string& frame_id) const;
  /// Throws ShapeError / DataError when an invariant is broken.
  void validate() const;

  bool operator==(const LatentIndex&) const = default;
};

inline constexpr std::uint16_t kIndexVersion = 1;
/// magic, version, kind, dtype, dim, count, checksum.
inline constexpr std::size_t kIndexHeaderBytes = 4 + 2 + 1 + 1 + 4 + 8 + 32;

/// Latent bytes only: count * dim * dtype_bytes.
std::uint64_t payload_bytes(const LatentIndex& index);
/// Length-prefixed frame-id table bytes.
std::uint64_t id_table_bytes(const LatentIndex& index);
/// Exact file size: header + id table + payload.
std::uint64_t file_bytes(const LatentIndex& index);

struct CompressionStats {
  std::string label;
  std::uint64_t n_frames = 0;
  /// Frames as 8-bit RGB at their native resolution.
  std::uint64_t raw_bytes = 0;
  std::uint64_t index_bytes = 0;
  /// raw_bytes / index_bytes; none for an empty corpus.
  std::optional<double> ratio;
  double encode_seconds = 0.0;
};

struct BuildResult {
  LatentIndex index;
  CompressionStats stats;
};

/// Encodes every frame (AE latent or VAE mean) into an index sorted by frame id.
BuildResult build_index(const models::Model& model, const dataio::FrameCorpus& corpus,
                        DType dtype = DType::f32);

std::vector<std::uint8_t> serialize_index(const LatentIndex& index);
/// Throws FormatError (bad_magic, bad_version, truncated, malformed). With an
/// expected checksum, a mismatch is a DataError.
LatentIndex deserialize_index(std::span<const std::uint8_t> bytes,
                              const std::optional<Digest>& expected_checksum = std::nullopt);

void save_index(const LatentIndex& index, const std::filesystem::path& path);
LatentIndex load_index(const std::filesystem::path& path,
                       const std::optional<Digest>& expected_checksum = std::nullopt);

}  // namespace lvr::index
