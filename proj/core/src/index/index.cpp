#include "lvr/index/index.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

#include "lvr/error.hpp"

namespace lvr::index {

std::string to_string(DType dtype) {
  switch (dtype) {
    case DType::f32:
      return "f32";
    case DType::f16:
      return "f16";
  }
  throw ConfigError("unknown dtype");
}

DType parse_dtype(const std::string& s) {
  if (s == "f32") return DType::f32;
  if (s == "f16") return DType::f16;
  throw ConfigError("unknown dtype '" + s + "' (expected f32 or f16)");
}

std::size_t dtype_bytes(DType dtype) { return dtype == DType::f16 ? 2 : 4; }

std::uint16_t float_to_half(float value) {
  const auto x = std::bit_cast<std::uint32_t>(value);
  const auto sign = static_cast<std::uint16_t>((x >> 16) & 0x8000u);
  const std::uint32_t a = x & 0x7fffffffu;
  if (a >= 0x7f800000u) return sign | (a > 0x7f800000u ? 0x7e00u : 0x7c00u);
  if (a >= 0x477ff000u) return sign | 0x7c00u;  // rounds past the largest finite half
  if (a < 0x38800000u) {
    // Subnormal range: scaling by 2^24 is exact, nearbyint rounds half to even.
    const float scaled = std::bit_cast<float>(a) * 16777216.0f;
    return sign | static_cast<std::uint16_t>(std::nearbyint(scaled));
  }
  const std::uint32_t mant = a & 0x7fffffu;
  const std::uint32_t exp = (a >> 23) - 127 + 15;
  std::uint32_t h = (exp << 10) | (mant >> 13);
  const std::uint32_t rem = mant & 0x1fffu;
  if (rem > 0x1000u || (rem == 0x1000u && (h & 1u))) ++h;
  return sign | static_cast<std::uint16_t>(h);
}

float half_to_float(std::uint16_t bits) {
  const std::uint32_t sign = std::uint32_t{bits & 0x8000u} << 16;
  const std::uint32_t exp = (bits >> 10) & 0x1fu;
  const std::uint32_t mant = bits & 0x3ffu;
  if (exp == 0) {
    const float v = static_cast<float>(mant) * (1.0f / 16777216.0f);
    return sign ? -v : v;
  }
  if (exp == 31) return std::bit_cast<float>(sign | 0x7f800000u | (mant << 13));
  return std::bit_cast<float>(sign | ((exp - 15 + 127) << 23) | (mant << 13));
}

float round_to_half(float value) { return half_to_float(float_to_half(value)); }

const IndexEntry* LatentIndex::find(const std::string& frame_id) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), frame_id,
                             [](const IndexEntry& e, const std::string& id) { return e.frame_id < id; });
  return it != entries.end() && it->frame_id == frame_id ? &*it : nullptr;
}

void LatentIndex::validate() const {
  if (model_kind == models::ModelKind::siamese) throw DataError("an index holds AE or VAE latents only");
  if (dim == 0) throw ShapeError("index dim must be positive");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].latent.size() != dim) {
      throw ShapeError("index entry '" + entries[i].frame_id + "' has " +
                       std::to_string(entries[i].latent.size()) + " values, dim is " + std::to_string(dim));
    }
    if (i > 0 && !(entries[i - 1].frame_id < entries[i].frame_id)) {
      throw DataError("index frame ids must be unique and sorted (at '" + entries[i].frame_id + "')");
    }
  }
}

std::uint64_t payload_bytes(const LatentIndex& index) {
  return std::uint64_t{index.size()} * index.dim * dtype_bytes(index.dtype);
}

std::uint64_t id_table_bytes(const LatentIndex& index) {
  std::uint64_t n = 0;
  for (const auto& e : index.entries) n += 4 + e.frame_id.size();
  return n;
}

std::uint64_t file_bytes(const LatentIndex& index) {
  return kIndexHeaderBytes + id_table_bytes(index) + payload_bytes(index);
}

BuildResult build_index(const models::Model& model, const dataio::FrameCorpus& corpus, DType dtype) {
  if (model.kind() == models::ModelKind::siamese) {
    throw ConfigError("build_index needs an AE or VAE model, got siamese");
  }
  const auto start = std::chrono::steady_clock::now();
  BuildResult out;
  auto& index = out.index;
  index.model_kind = model.kind();
  index.model_checksum = model.checksum();
  index.dim = model.latent_dim();
  index.dtype = dtype;

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return corpus[a].id < corpus[b].id; });

  std::uint64_t raw = 0;
  for (auto i : order) {
    const auto& frame = corpus[i];
    std::vector<float> z;
    try {
      z = model.kind() == models::ModelKind::ae ? models::ae_encode(model, frame.pixels)
                                                : models::vae_encode_mu(model, frame.pixels);
    } catch (const NumericError& e) {
      throw NumericError("encoding frame '" + frame.id + "': " + e.what());
    } catch (const Error& e) {
      throw DataError("encoding frame '" + frame.id + "': " + e.what());
    }
    if (z.size() != index.dim) throw Error("internal: encoder returned a latent of the wrong length");
    if (dtype == DType::f16) {
      for (auto& v : z) v = round_to_half(v);
    }
    index.entries.push_back({frame.id, std::move(z)});
    raw += std::uint64_t{frame.pixels.height} * frame.pixels.width * 3;
  }

  auto& stats = out.stats;
  stats.label = models::to_string(model.kind());
  stats.n_frames = index.size();
  stats.raw_bytes = raw;
  stats.index_bytes = file_bytes(index);
  if (stats.n_frames > 0) stats.ratio = static_cast<double>(raw) / static_cast<double>(stats.index_bytes);
  stats.encode_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<std::uint8_t> serialize_index(const LatentIndex& index) {
  index.validate();
  ByteWriter w;
  w.text("LVIX");
  w.u16(kIndexVersion);
  w.u8(static_cast<std::uint8_t>(index.model_kind));
  w.u8(static_cast<std::uint8_t>(index.dtype));
  w.u32(index.dim);
  w.u64(index.size());
  w.bytes(index.model_checksum);
  for (const auto& e : index.entries) {
    w.u32(static_cast<std::uint32_t>(e.frame_id.size()));
    w.text(e.frame_id);
  }
  for (const auto& e : index.entries) {
    for (float v : e.latent) {
      if (index.dtype == DType::f16) {
        w.u16(float_to_half(v));
      } else {
        w.f32(v);
      }
    }
  }
  return w.take();
}

LatentIndex deserialize_index(std::span<const std::uint8_t> bytes, const std::optional<Digest>& expected_checksum) {
  using K = FormatError::Kind;
  ByteReader r(bytes, "index");
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), "LVIX")) throw FormatError(K::bad_magic, "index: bad magic");
  const auto version = r.u16();
  if (version != kIndexVersion) {
    throw FormatError(K::bad_version, "index: unsupported version " + std::to_string(version));
  }
  LatentIndex index;
  const auto kind = r.u8();
  if (kind > static_cast<std::uint8_t>(models::ModelKind::vae)) {
    throw FormatError(K::malformed, "index: bad model kind " + std::to_string(kind));
  }
  index.model_kind = static_cast<models::ModelKind>(kind);
  const auto dtype = r.u8();
  if (dtype > static_cast<std::uint8_t>(DType::f16)) {
    throw FormatError(K::malformed, "index: bad dtype " + std::to_string(dtype));
  }
  index.dtype = static_cast<DType>(dtype);
  index.dim = r.u32();
  if (index.dim == 0) throw FormatError(K::malformed, "index: dim is zero");
  const auto count = r.u64();
  const auto checksum = r.bytes(32);
  std::copy(checksum.begin(), checksum.end(), index.model_checksum.begin());
  // Every entry needs at least its length prefix.
  if (count > r.remaining() / 4) throw FormatError(K::truncated, "index: truncated payload");

  index.entries.resize(count);
  for (auto& e : index.entries) {
    const auto len = r.u32();
    const auto id = r.bytes(len);
    e.frame_id.assign(id.begin(), id.end());
  }
  for (std::size_t i = 1; i < index.entries.size(); ++i) {
    if (!(index.entries[i - 1].frame_id < index.entries[i].frame_id)) {
      throw FormatError(K::malformed, "index: frame ids not sorted and unique");
    }
  }
  for (auto& e : index.entries) {
    e.latent.resize(index.dim);
    for (auto& v : e.latent) v = index.dtype == DType::f16 ? half_to_float(r.u16()) : r.f32();
  }
  if (r.remaining() != 0) throw FormatError(K::malformed, "index: trailing bytes after payload");
  if (expected_checksum && *expected_checksum != index.model_checksum) {
    throw DataError("index was built by a different model (checksum " + to_hex(index.model_checksum) +
                    ", expected " + to_hex(*expected_checksum) + ")");
  }
  return index;
}

void save_index(const LatentIndex& index, const std::filesystem::path& path) {
  write_binary_file(path, serialize_index(index));
}

LatentIndex load_index(const std::filesystem::path& path, const std::optional<Digest>& expected_checksum) {
  return deserialize_index(read_binary_file(path), expected_checksum);
}

}  // namespace lvr::index
