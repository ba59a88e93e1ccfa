#include "lvr/models/model.hpp"

#include <cmath>

#include "lvr/error.hpp"
#include "lvr/nn/ops.hpp"

namespace lvr::models {

using nn::InitScheme;
using nn::LayerSpec;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ae: return "AE";
    case ModelKind::vae: return "VAE";
    case ModelKind::siamese: return "Siamese";
  }
  return "unknown";
}

ArchConfig default_ae_config() { return {}; }

ArchConfig default_vae_config() {
  ArchConfig c;
  c.latent_dim = 10;
  return c;
}

ArchConfig default_siamese_config() {
  ArchConfig c;
  c.input_size = 100;
  c.latent_dim = 64;
  return c;
}

ArchConfig paper_ae_config() {
  ArchConfig c;
  c.input_size = 124;
  return c;
}

namespace {

std::uint32_t half_up(std::uint32_t v) { return (v + 1) / 2; }

std::vector<LayerSpec> conv_trunk(const ArchConfig& c) {
  std::vector<LayerSpec> layers;
  std::uint32_t in = 3;
  for (auto ch : c.channels) {
    layers.push_back(LayerSpec::conv2d(in, ch, c.kernel, 2, InitScheme::he));
    layers.push_back(LayerSpec::relu());
    in = ch;
  }
  layers.push_back(LayerSpec::flatten());
  return layers;
}

std::vector<LayerSpec> mirrored_decoder(const ArchConfig& c) {
  const std::uint32_t s0 = c.input_size;
  const std::uint32_t s1 = half_up(s0), s2 = half_up(s1), s3 = half_up(s2);
  const std::uint32_t feat = c.channels[2] * s3 * s3;
  return {
      LayerSpec::dense(c.latent_dim, feat, InitScheme::he),
      LayerSpec::relu(),
      LayerSpec::unflatten(c.channels[2], s3, s3),
      LayerSpec::upsample2(s2, s2),
      LayerSpec::conv2d(c.channels[2], c.channels[1], c.kernel, 1, InitScheme::he),
      LayerSpec::relu(),
      LayerSpec::upsample2(s1, s1),
      LayerSpec::conv2d(c.channels[1], c.channels[0], c.kernel, 1, InitScheme::he),
      LayerSpec::relu(),
      LayerSpec::upsample2(s0, s0),
      LayerSpec::conv2d(c.channels[0], 3, c.kernel, 1, InitScheme::glorot),
      LayerSpec::sigmoid(),
  };
}

std::uint32_t trunk_features(const ArchConfig& c) {
  const std::uint32_t s3 = half_up(half_up(half_up(c.input_size)));
  return c.channels[2] * s3 * s3;
}

}  // namespace

ModelSpec make_spec(ModelKind kind, const ArchConfig& c) {
  if (c.input_size < 8) throw ConfigError("input_size must be >= 8");
  if (c.latent_dim == 0) throw ConfigError("latent_dim must be positive");
  for (auto ch : c.channels) {
    if (ch == 0) throw ConfigError("channel widths must be positive");
  }
  if (kind == ModelKind::siamese && !(c.margin > 0.0f)) throw ConfigError("margin must be positive");

  ModelSpec spec;
  spec.kind = kind;
  spec.input_height = spec.input_width = c.input_size;
  spec.latent_dim = c.latent_dim;
  spec.margin = c.margin;
  spec.encoder = conv_trunk(c);
  const std::uint32_t feat = trunk_features(c);
  switch (kind) {
    case ModelKind::ae:
      spec.encoder.push_back(LayerSpec::dense(feat, c.latent_dim, InitScheme::glorot));
      spec.decoder = mirrored_decoder(c);
      break;
    case ModelKind::vae:
      spec.mu_head = {LayerSpec::dense(feat, c.latent_dim, InitScheme::zero)};
      spec.log_var_head = {LayerSpec::dense(feat, c.latent_dim, InitScheme::zero)};
      spec.decoder = mirrored_decoder(c);
      break;
    case ModelKind::siamese:
      spec.encoder.push_back(LayerSpec::dense(feat, c.latent_dim, InitScheme::glorot));
      break;
  }
  return spec;
}

std::size_t count_parameters(const ModelSpec& spec) {
  return nn::count_parameters(spec.encoder) + nn::count_parameters(spec.mu_head) +
         nn::count_parameters(spec.log_var_head) + nn::count_parameters(spec.decoder);
}

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) { build(seed); }

void Model::build(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x1417ULL));
  const nn::Shape input{3, spec_.input_height, spec_.input_width};
  encoder_ = nn::Sequential<float>(spec_.encoder, input, rng);
  const nn::Shape code{spec_.latent_dim};
  switch (spec_.kind) {
    case ModelKind::ae:
    case ModelKind::siamese:
      if (encoder_.output_shape() != code) {
        throw ConfigError("encoder output " + nn::shape_string(encoder_.output_shape()) +
                          " does not match latent_dim " + std::to_string(spec_.latent_dim));
      }
      if (!spec_.mu_head.empty() || !spec_.log_var_head.empty()) {
        throw ConfigError(to_string(spec_.kind) + " model must not have VAE heads");
      }
      break;
    case ModelKind::vae:
      mu_head_ = nn::Sequential<float>(spec_.mu_head, encoder_.output_shape(), rng);
      log_var_head_ = nn::Sequential<float>(spec_.log_var_head, encoder_.output_shape(), rng);
      if (mu_head_.output_shape() != code || log_var_head_.output_shape() != code) {
        throw ConfigError("VAE heads must both produce latent_dim values");
      }
      break;
  }
  if (spec_.kind == ModelKind::siamese) {
    if (!spec_.decoder.empty()) throw ConfigError("Siamese model must not have a decoder");
  } else {
    decoder_ = nn::Sequential<float>(spec_.decoder, code, rng);
    if (decoder_.output_shape() != input) {
      throw ConfigError("decoder output " + nn::shape_string(decoder_.output_shape()) +
                        " does not mirror input " + nn::shape_string(input));
    }
  }
}

std::size_t Model::parameter_count() const { return count_parameters(spec_); }

std::vector<nn::Parameter<float>> Model::parameters() const {
  auto out = encoder_.parameters("encoder.");
  for (auto& p : mu_head_.parameters("mu_head.")) out.push_back(std::move(p));
  for (auto& p : log_var_head_.parameters("log_var_head.")) out.push_back(std::move(p));
  for (auto& p : decoder_.parameters("decoder.")) out.push_back(std::move(p));
  return out;
}

nn::Var<float> Model::encode_graph(nn::Tape<float>& tape, const nn::Var<float>& x) const {
  if (spec_.kind == ModelKind::vae) return vae_heads(tape, x).mu;
  return encoder_.forward(tape, x);
}

VaeHeads Model::vae_heads(nn::Tape<float>& tape, const nn::Var<float>& x) const {
  if (spec_.kind != ModelKind::vae) throw ConfigError("vae_heads on a " + to_string(kind()) + " model");
  auto features = encoder_.forward(tape, x);
  return {mu_head_.forward(tape, features), log_var_head_.forward(tape, features)};
}

nn::Var<float> Model::decode_graph(nn::Tape<float>& tape, const nn::Var<float>& z) const {
  if (spec_.kind == ModelKind::siamese) throw ConfigError("Siamese models have no decoder");
  return decoder_.forward(tape, z);
}

nn::Tensor<float> Model::input_batch(std::span<const dataio::Image* const> frames) const {
  return dataio::to_batch(frames, spec_.input_height, spec_.input_width);
}

namespace {

void require_finite(std::span<const float> v, const char* what) {
  for (float x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string(what) + " produced a non-finite value");
  }
}

constexpr std::size_t kInferenceChunk = 64;

}  // namespace

std::vector<float> Model::encode(const dataio::Image& frame) const {
  const dataio::Image* one[] = {&frame};
  return std::move(encode_all(one).front());
}

std::vector<std::vector<float>> Model::encode_all(std::span<const dataio::Image* const> frames) const {
  std::vector<std::vector<float>> out;
  out.reserve(frames.size());
  for (std::size_t start = 0; start < frames.size(); start += kInferenceChunk) {
    auto chunk = frames.subspan(start, std::min(kInferenceChunk, frames.size() - start));
    nn::Tape<float> tape(nn::Tape<float>::Mode::inference);
    auto z = encode_graph(tape, nn::make_leaf(input_batch(chunk)));
    require_finite(z->value.data(), "encoder");
    const std::size_t d = spec_.latent_dim;
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      out.emplace_back(z->value.data().begin() + i * d, z->value.data().begin() + (i + 1) * d);
    }
  }
  return out;
}

std::vector<float> Model::encode_log_var(const dataio::Image& frame) const {
  const dataio::Image* one[] = {&frame};
  nn::Tape<float> tape(nn::Tape<float>::Mode::inference);
  auto heads = vae_heads(tape, nn::make_leaf(input_batch(one)));
  return heads.log_var->value.storage();
}

dataio::Image Model::decode(std::span<const float> latent) const {
  if (latent.size() != spec_.latent_dim) {
    throw ShapeError("decode: latent of length " + std::to_string(latent.size()) + ", model expects " +
                     std::to_string(spec_.latent_dim));
  }
  nn::Tape<float> tape(nn::Tape<float>::Mode::inference);
  auto z = nn::make_leaf(nn::Tensor<float>({1, latent.size()}, {latent.begin(), latent.end()}));
  auto y = decode_graph(tape, z);
  return dataio::from_chw(y->value.data(), spec_.input_height, spec_.input_width);
}

dataio::Image Model::reconstruct(const dataio::Image& frame) const {
  return decode(encode(frame));
}

namespace {

constexpr std::array<std::uint8_t, 4> kWeightsMagic = {'L', 'V', 'W', 'T'};

enum class StackRole : std::uint8_t { encoder = 0, mu_head = 1, log_var_head = 2, decoder = 3 };

void write_stack(ByteWriter& w, StackRole role, const std::vector<LayerSpec>& layers) {
  w.u8(static_cast<std::uint8_t>(role));
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u8(static_cast<std::uint8_t>(l.init));
    w.u32(l.in);
    w.u32(l.out);
    w.u32(l.kernel);
    w.u32(l.stride);
    w.u32(l.height);
    w.u32(l.width);
  }
}

std::vector<LayerSpec> read_stack(ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (n > 4096) throw FormatError(FormatError::Kind::malformed, "weights: implausible layer count");
  std::vector<LayerSpec> layers(n);
  for (auto& l : layers) {
    const auto kind = r.u8();
    const auto init = r.u8();
    if (kind > static_cast<std::uint8_t>(nn::LayerKind::unflatten) ||
        init > static_cast<std::uint8_t>(InitScheme::zero)) {
      throw FormatError(FormatError::Kind::malformed, "weights: unknown layer kind or init");
    }
    l.kind = static_cast<nn::LayerKind>(kind);
    l.init = static_cast<InitScheme>(init);
    l.in = r.u32();
    l.out = r.u32();
    l.kernel = r.u32();
    l.stride = r.u32();
    l.height = r.u32();
    l.width = r.u32();
  }
  return layers;
}

}  // namespace

std::vector<std::uint8_t> Model::serialize() const {
  ByteWriter w;
  w.bytes(kWeightsMagic);
  w.u16(kWeightsVersion);
  w.u8(static_cast<std::uint8_t>(spec_.kind));
  w.u32(3);
  w.u32(spec_.input_height);
  w.u32(spec_.input_width);
  w.u32(spec_.latent_dim);
  w.f32(spec_.margin);
  w.u8(4);
  write_stack(w, StackRole::encoder, spec_.encoder);
  write_stack(w, StackRole::mu_head, spec_.mu_head);
  write_stack(w, StackRole::log_var_head, spec_.log_var_head);
  write_stack(w, StackRole::decoder, spec_.decoder);
  const auto params = parameters();
  std::uint64_t total = 0;
  for (const auto& p : params) total += p.var->value.size();
  w.u64(total);
  for (const auto& p : params) {
    for (float v : p.var->value.data()) w.f32(v);
  }
  return w.take();
}

Model Model::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "weights");
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kWeightsMagic.begin())) {
    throw FormatError(FormatError::Kind::bad_magic, "weights: bad magic");
  }
  const auto version = r.u16();
  if (version != kWeightsVersion) {
    throw FormatError(FormatError::Kind::bad_version,
                      "weights: unsupported version " + std::to_string(version));
  }
  const auto kind = r.u8();
  if (kind > static_cast<std::uint8_t>(ModelKind::siamese)) {
    throw FormatError(FormatError::Kind::malformed, "weights: unknown model kind");
  }
  Model m;
  m.spec_.kind = static_cast<ModelKind>(kind);
  if (r.u32() != 3) throw FormatError(FormatError::Kind::malformed, "weights: input must have 3 channels");
  m.spec_.input_height = r.u32();
  m.spec_.input_width = r.u32();
  m.spec_.latent_dim = r.u32();
  m.spec_.margin = r.f32();
  const auto stacks = r.u8();
  for (std::uint8_t s = 0; s < stacks; ++s) {
    const auto role = r.u8();
    auto layers = read_stack(r);
    switch (static_cast<StackRole>(role)) {
      case StackRole::encoder: m.spec_.encoder = std::move(layers); break;
      case StackRole::mu_head: m.spec_.mu_head = std::move(layers); break;
      case StackRole::log_var_head: m.spec_.log_var_head = std::move(layers); break;
      case StackRole::decoder: m.spec_.decoder = std::move(layers); break;
      default: throw FormatError(FormatError::Kind::malformed, "weights: unknown stack role");
    }
  }
  try {
    m.build(0);
  } catch (const Error& e) {
    throw FormatError(FormatError::Kind::malformed, std::string("weights: invalid spec block: ") + e.what());
  }
  const auto params = m.parameters();
  std::uint64_t expected = 0;
  for (const auto& p : params) expected += p.var->value.size();
  if (r.u64() != expected) throw FormatError(FormatError::Kind::malformed, "weights: parameter count mismatch");
  for (const auto& p : params) {
    for (auto& v : p.var->value.data()) v = r.f32();
  }
  if (r.remaining() != 0) throw FormatError(FormatError::Kind::malformed, "weights: trailing bytes");
  return m;
}

void Model::save(const std::filesystem::path& path) const { write_binary_file(path, serialize()); }

Model Model::load(const std::filesystem::path& path) { return deserialize(read_binary_file(path)); }

Digest Model::checksum() const { return sha256(serialize()); }

namespace {

void require_kind(const Model& m, ModelKind kind, const char* op) {
  if (m.kind() != kind) {
    throw ConfigError(std::string(op) + " needs a " + to_string(kind) + " model, got " +
                      to_string(m.kind()));
  }
}

}  // namespace

std::vector<float> ae_encode(const Model& ae, const dataio::Image& frame) {
  require_kind(ae, ModelKind::ae, "ae_encode");
  return ae.encode(frame);
}

std::vector<float> vae_encode_mu(const Model& vae, const dataio::Image& frame) {
  require_kind(vae, ModelKind::vae, "vae_encode_mu");
  return vae.encode(frame);
}

double embedding_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeError("embedding_distance: length mismatch");
  float acc = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const float d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double siamese_distance(const Model& siamese, const dataio::Image& a, const dataio::Image& b) {
  require_kind(siamese, ModelKind::siamese, "siamese_distance");
  return embedding_distance(siamese.encode(a), siamese.encode(b));
}

}  // namespace lvr::models
