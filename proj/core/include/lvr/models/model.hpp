#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lvr/binio.hpp"
#include "lvr/dataio/image.hpp"
#include "lvr/nn/layers.hpp"

namespace lvr::models {

enum class ModelKind : std::uint8_t { ae = 0, vae = 1, siamese = 2 };

std::string to_string(ModelKind kind);

/// Architecture knobs shared by the three networks: three stride-2 3x3
/// conv-relu stages, then a dense layer to the latent/embedding width.
struct ArchConfig {
  std::uint32_t input_size = 64;  // square frames, 3 channels
  std::array<std::uint32_t, 3> channels = {16, 32, 64};
  std::uint32_t kernel = 3;
  std::uint32_t latent_dim = 32;
  float margin = 1.0f;  // Siamese only
};

ArchConfig default_ae_config();       // 64x64, latent 32
ArchConfig default_vae_config();      // 64x64, latent 10
ArchConfig default_siamese_config();  // 100x100, 64-d embedding, margin 1
ArchConfig paper_ae_config();         // 124x124, latent 32

/// Layer tables of a network. Unused stacks are empty:
///   ae       encoder (ends in the latent dense layer), decoder
///   vae      encoder (trunk, ends in flatten), mu_head, log_var_head, decoder
///   siamese  encoder (the embedding network)
struct ModelSpec {
  ModelKind kind = ModelKind::ae;
  std::uint32_t input_height = 64;
  std::uint32_t input_width = 64;
  std::uint32_t latent_dim = 32;
  float margin = 1.0f;
  std::vector<nn::LayerSpec> encoder;
  std::vector<nn::LayerSpec> mu_head;
  std::vector<nn::LayerSpec> log_var_head;
  std::vector<nn::LayerSpec> decoder;

  bool operator==(const ModelSpec&) const = default;
};

ModelSpec make_spec(ModelKind kind, const ArchConfig& config);

/// Trainable element count of every layer in the spec.
std::size_t count_parameters(const ModelSpec& spec);

struct VaeHeads {
  nn::Var<float> mu;
  nn::Var<float> log_var;
};

/// A network with its weights. Copies are deep. Const member functions do not
/// mutate weights and may run concurrently.
class Model {
 public:
  Model(ModelSpec spec, std::uint64_t seed);

  ModelKind kind() const noexcept { return spec_.kind; }
  const ModelSpec& spec() const noexcept { return spec_; }
  std::uint32_t latent_dim() const noexcept { return spec_.latent_dim; }
  std::size_t parameter_count() const;

  /// Parameters in declaration order: encoder, mu_head, log_var_head, decoder.
  std::vector<nn::Parameter<float>> parameters() const;

  // Graph builders over [N,3,H,W] batches.
  /// AE latent, VAE mean, or Siamese embedding.
  nn::Var<float> encode_graph(nn::Tape<float>& tape, const nn::Var<float>& x) const;
  VaeHeads vae_heads(nn::Tape<float>& tape, const nn::Var<float>& x) const;
  nn::Var<float> decode_graph(nn::Tape<float>& tape, const nn::Var<float>& z) const;

  /// Resizes frames to the model input and stacks them as [N,3,H,W].
  nn::Tensor<float> input_batch(std::span<const dataio::Image* const> frames) const;

  // Frame-level inference (no sampling anywhere).
  std::vector<float> encode(const dataio::Image& frame) const;
  std::vector<std::vector<float>> encode_all(std::span<const dataio::Image* const> frames) const;
  std::vector<float> encode_log_var(const dataio::Image& frame) const;
  dataio::Image decode(std::span<const float> latent) const;
  dataio::Image reconstruct(const dataio::Image& frame) const;

  /// Weight file bytes: "LVWT", u16 version, u8 kind, spec block, then f32
  /// parameters in declaration order, all little-endian.
  std::vector<std::uint8_t> serialize() const;
  static Model deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

  /// SHA-256 of serialize(), i.e. of the weights file.
  Digest checksum() const;

 private:
  Model() = default;
  void build(std::uint64_t seed);

  ModelSpec spec_;
  nn::Sequential<float> encoder_;
  nn::Sequential<float> mu_head_;
  nn::Sequential<float> log_var_head_;
  nn::Sequential<float> decoder_;
};

inline constexpr std::uint16_t kWeightsVersion = 1;

// Named operations over a Model of the matching kind (ConfigError otherwise).
std::vector<float> ae_encode(const Model& ae, const dataio::Image& frame);
std::vector<float> vae_encode_mu(const Model& vae, const dataio::Image& frame);

/// Euclidean distance between the two embeddings of one weight set.
double siamese_distance(const Model& siamese, const dataio::Image& a, const dataio::Image& b);
/// Same metric on precomputed embeddings.
double embedding_distance(std::span<const float> a, std::span<const float> b);

}  // namespace lvr::models
