#include "lvr/models/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "lvr/error.hpp"
#include "lvr/nn/ops.hpp"
#include "lvr/rng.hpp"

namespace lvr::models {

TrainConfig default_ae_training() {
  TrainConfig c;
  c.learning_rate = 1.0;
  return c;
}

TrainConfig default_vae_training() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  return c;
}

TrainConfig default_siamese_training() {
  TrainConfig c;
  c.epochs = 1000;
  c.iterations_per_epoch = 100;
  c.learning_rate = 0.005;
  return c;
}

namespace {

using Clock = std::chrono::steady_clock;

// Yields minibatches over a fixed index range, reshuffling on every wrap.
class BatchCursor {
 public:
  BatchCursor(std::size_t n, std::size_t batch, std::uint64_t seed)
      : order_(n), batch_(batch), rng_(seed) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng_.shuffle(order_);
  }

  std::vector<std::size_t> next() {
    if (pos_ == order_.size()) {
      rng_.shuffle(order_);
      pos_ = 0;
    }
    const std::size_t take = std::min(batch_, order_.size() - pos_);
    std::vector<std::size_t> out(order_.begin() + pos_, order_.begin() + pos_ + take);
    pos_ += take;
    return out;
  }

  std::size_t steps_per_pass() const { return (order_.size() + batch_ - 1) / batch_; }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  Rng rng_;
};

// Model-resolution CHW copies of every frame, gathered into batches.
class InputCache {
 public:
  InputCache(const Model& model, const dataio::FrameCorpus& corpus)
      : h_(model.spec().input_height), w_(model.spec().input_width) {
    data_.reserve(corpus.size() * stride());
    for (const auto& f : corpus.frames()) dataio::append_chw(f.pixels, h_, w_, data_);
  }

  nn::Tensor<float> gather(const std::vector<std::size_t>& idx) const {
    std::vector<float> out(idx.size() * stride());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(idx[i] * stride()), stride(),
                  out.begin() + static_cast<std::ptrdiff_t>(i * stride()));
    }
    return nn::Tensor<float>({idx.size(), 3, h_, w_}, std::move(out));
  }

 private:
  std::size_t stride() const { return 3 * h_ * w_; }
  std::size_t h_, w_;
  std::vector<float> data_;
};

void require_kind(const Model& m, ModelKind kind, const char* who) {
  if (m.kind() != kind) {
    throw ConfigError(std::string(who) + " needs a " + to_string(kind) + " model, got " +
                      to_string(m.kind()));
  }
}

void validate(const TrainConfig& c) {
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (!(c.beta >= 0.0)) throw ConfigError("beta must be >= 0");
}

void check_loss(double loss, std::uint32_t epoch) {
  if (!std::isfinite(loss)) {
    throw NumericError("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
  }
}

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

TrainReport ae_train(Model& ae, const dataio::FrameCorpus& corpus, const TrainConfig& config) {
  require_kind(ae, ModelKind::ae, "ae_train");
  validate(config);
  if (corpus.empty()) throw DataError("ae_train: empty corpus");
  const auto start = Clock::now();

  const InputCache inputs(ae, corpus);
  auto opt = nn::Optimizer<float>::adadelta(ae.parameters(), {.learning_rate = config.learning_rate});
  BatchCursor cursor(corpus.size(), config.batch_size, mix_seed(config.seed, 0xAE01));
  const std::size_t steps =
      config.iterations_per_epoch ? config.iterations_per_epoch : cursor.steps_per_pass();

  TrainReport report;
  report.seed = config.seed;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    std::size_t seen = 0;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto idx = cursor.next();
      nn::Tape<float> tape;
      const auto batch = inputs.gather(idx);
      auto x = nn::make_leaf(batch);
      auto recon = ae.decode_graph(tape, ae.encode_graph(tape, x));
      auto loss = nn::bce_loss(tape, recon, batch);
      const double value = loss->value[0];
      check_loss(value, epoch);
      nn::zero_grads(opt.params());
      tape.backward(loss);
      opt.step();
      total += value * static_cast<double>(idx.size());
      seen += idx.size();
    }
    const double mean = total / static_cast<double>(seen);
    report.epoch_losses.push_back(mean);
    report.epochs = epoch + 1;
    if (config.on_epoch) config.on_epoch(epoch, mean);
  }
  report.seconds = elapsed(start);
  return report;
}

TrainReport vae_train(Model& vae, const dataio::FrameCorpus& corpus, const TrainConfig& config) {
  require_kind(vae, ModelKind::vae, "vae_train");
  validate(config);
  if (corpus.empty()) throw DataError("vae_train: empty corpus");
  const auto start = Clock::now();

  const InputCache inputs(vae, corpus);
  auto opt = nn::Optimizer<float>::adam(vae.parameters(), {.learning_rate = config.learning_rate});
  BatchCursor cursor(corpus.size(), config.batch_size, mix_seed(config.seed, 0xAE02));
  Rng noise(mix_seed(config.seed, 0xAE03));
  const std::size_t steps =
      config.iterations_per_epoch ? config.iterations_per_epoch : cursor.steps_per_pass();
  // KL is a per-frame sum while BCE is a per-element mean; dividing KL by the
  // element count keeps beta = 1 equal to the usual per-frame objective.
  const double pixels = 3.0 * vae.spec().input_height * vae.spec().input_width;
  const auto kl_weight = static_cast<float>(config.beta / pixels);

  TrainReport report;
  report.seed = config.seed;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0, rec_total = 0.0, kl_total = 0.0;
    std::size_t seen = 0;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto idx = cursor.next();
      nn::Tape<float> tape;
      const auto batch = inputs.gather(idx);
      auto heads = vae.vae_heads(tape, nn::make_leaf(batch));
      nn::Tensor<float> eps(heads.mu->value.shape());
      for (auto& e : eps.data()) e = static_cast<float>(noise.normal());
      auto z = nn::reparameterize(tape, heads.mu, heads.log_var, eps);
      auto recon = vae.decode_graph(tape, z);
      auto rec = nn::bce_loss(tape, recon, batch);
      auto kl = nn::kl_unit_normal(tape, heads.mu, heads.log_var);
      auto loss = nn::add_scaled(tape, rec, kl, kl_weight);
      const double value = loss->value[0];
      check_loss(value, epoch);
      nn::zero_grads(opt.params());
      tape.backward(loss);
      opt.step();
      const auto n = static_cast<double>(idx.size());
      total += value * n;
      rec_total += rec->value[0] * n;
      kl_total += kl->value[0] * n;
      seen += idx.size();
    }
    const auto n = static_cast<double>(seen);
    report.epoch_losses.push_back(total / n);
    report.epoch_reconstruction.push_back(rec_total / n);
    report.epoch_kl.push_back(kl_total / n);
    report.epochs = epoch + 1;
    if (config.on_epoch) config.on_epoch(epoch, total / n);
  }
  report.seconds = elapsed(start);
  return report;
}

namespace {

struct PairInputs {
  InputCache cache;
  std::vector<std::size_t> a, b;
  std::vector<std::uint8_t> y;
};

PairInputs resolve_pairs(const Model& model, const dataio::FrameCorpus& corpus,
                         const std::vector<dataio::PairSample>& pairs) {
  PairInputs out{InputCache(model, corpus), {}, {}, {}};
  for (const auto& p : pairs) {
    const auto ia = corpus.find(p.a);
    const auto ib = corpus.find(p.b);
    if (!ia) throw DataError("pair references missing frame '" + p.a + "'");
    if (!ib) throw DataError("pair references missing frame '" + p.b + "'");
    if (p.y > 1) throw DataError("pair label must be 0 or 1");
    out.a.push_back(*ia);
    out.b.push_back(*ib);
    out.y.push_back(p.y);
  }
  return out;
}

}  // namespace

TrainReport siamese_train(Model& siamese, const dataio::FrameCorpus& corpus,
                          const std::vector<dataio::PairSample>& pairs, const TrainConfig& config) {
  require_kind(siamese, ModelKind::siamese, "siamese_train");
  validate(config);
  if (pairs.empty()) throw DataError("siamese_train: empty pair stream");
  const bool has_similar = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.y == 0; });
  const bool has_dissimilar = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.y == 1; });
  if (!has_similar || !has_dissimilar) {
    throw DataError("siamese_train: pair stream holds a single class; contrastive training needs both");
  }
  const auto start = Clock::now();

  const auto inputs = resolve_pairs(siamese, corpus, pairs);
  auto opt = nn::Optimizer<float>::adam(siamese.parameters(), {.learning_rate = config.learning_rate});
  BatchCursor cursor(pairs.size(), config.batch_size, mix_seed(config.seed, 0xAE04));
  const std::size_t steps =
      config.iterations_per_epoch ? config.iterations_per_epoch : cursor.steps_per_pass();
  const float margin = siamese.spec().margin;

  TrainReport report;
  report.seed = config.seed;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    std::size_t seen = 0;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto idx = cursor.next();
      std::vector<std::size_t> ia, ib;
      std::vector<std::uint8_t> labels;
      for (auto k : idx) {
        ia.push_back(inputs.a[k]);
        ib.push_back(inputs.b[k]);
        labels.push_back(inputs.y[k]);
      }
      nn::Tape<float> tape;
      auto ea = siamese.encode_graph(tape, nn::make_leaf(inputs.cache.gather(ia)));
      auto eb = siamese.encode_graph(tape, nn::make_leaf(inputs.cache.gather(ib)));
      auto d = nn::pair_distance(tape, ea, eb);
      auto loss = nn::contrastive_loss(tape, d, labels, margin);
      const double value = loss->value[0];
      check_loss(value, epoch);
      nn::zero_grads(opt.params());
      tape.backward(loss);
      opt.step();
      total += value * static_cast<double>(idx.size());
      seen += idx.size();
    }
    const double mean = total / static_cast<double>(seen);
    report.epoch_losses.push_back(mean);
    report.epochs = epoch + 1;
    if (config.on_epoch) config.on_epoch(epoch, mean);
  }
  report.seconds = elapsed(start);
  return report;
}

double siamese_loss(const Model& siamese, const dataio::FrameCorpus& corpus,
                    const std::vector<dataio::PairSample>& pairs) {
  require_kind(siamese, ModelKind::siamese, "siamese_loss");
  if (pairs.empty()) throw DataError("siamese_loss: empty pair list");
  std::vector<const dataio::Image*> frames;
  for (const auto& f : corpus.frames()) frames.push_back(&f.pixels);
  const auto emb = siamese.encode_all(frames);
  double total = 0.0;
  for (const auto& p : pairs) {
    const auto ia = corpus.find(p.a), ib = corpus.find(p.b);
    if (!ia || !ib) throw DataError("pair references a missing frame");
    total += nn::contrastive_loss(embedding_distance(emb[*ia], emb[*ib]), p.y, siamese.spec().margin);
  }
  return total / static_cast<double>(pairs.size());
}

double reconstruction_loss(const Model& model, const dataio::FrameCorpus& corpus) {
  if (model.kind() == ModelKind::siamese) throw ConfigError("reconstruction_loss needs an AE or VAE");
  if (corpus.empty()) throw DataError("reconstruction_loss: empty corpus");
  const InputCache inputs(model, corpus);
  double total = 0.0;
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < corpus.size(); start += kChunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(corpus.size(), start + kChunk); ++i) idx.push_back(i);
    nn::Tape<float> tape(nn::Tape<float>::Mode::inference);
    const auto batch = inputs.gather(idx);
    auto recon = model.decode_graph(tape, model.encode_graph(tape, nn::make_leaf(batch)));
    auto loss = nn::bce_loss(tape, recon, batch);
    total += loss->value[0] * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(corpus.size());
}

}  // namespace lvr::models
