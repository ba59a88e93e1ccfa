#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lvr/dataio/corpus.hpp"
#include "lvr/dataio/synth.hpp"
#include "lvr/models/model.hpp"

namespace lvr::models {

struct TrainConfig {
  std::uint32_t epochs = 500;
  std::uint32_t batch_size = 32;
  /// Minibatch steps per epoch; 0 means one pass over the data.
  std::uint32_t iterations_per_epoch = 0;
  double learning_rate = 1.0;
  /// KL weight for the VAE objective.
  double beta = 1.0;
  std::uint64_t seed = 1;
  /// Called after every epoch with (epoch index, mean loss).
  std::function<void(std::uint32_t, double)> on_epoch;
};

TrainConfig default_ae_training();       // Adadelta, lr 1.0, 500 epochs
TrainConfig default_vae_training();      // Adam, lr 1e-3, 500 epochs
TrainConfig default_siamese_training();  // Adam, lr 0.005, 1000 epochs x 100 iterations

struct TrainReport {
  std::vector<double> epoch_losses;
  /// VAE only: the reconstruction and KL parts of each epoch loss.
  std::vector<double> epoch_reconstruction;
  std::vector<double> epoch_kl;
  std::uint32_t epochs = 0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Mean-BCE reconstruction training with Adadelta. Throws DataError on an
/// empty corpus and NumericError (naming the epoch) on divergence.
TrainReport ae_train(Model& ae, const dataio::FrameCorpus& corpus, const TrainConfig& config);

/// BCE + beta*KL with reparameterized sampling, Adam.
TrainReport vae_train(Model& vae, const dataio::FrameCorpus& corpus, const TrainConfig& config);

/// Contrastive training on a labeled pair stream, Adam. Pair ids refer to
/// frames in corpus. Throws DataError when the stream holds one class only.
TrainReport siamese_train(Model& siamese, const dataio::FrameCorpus& corpus,
                          const std::vector<dataio::PairSample>& pairs, const TrainConfig& config);

/// Mean contrastive loss of a model over a pair list (no training).
double siamese_loss(const Model& siamese, const dataio::FrameCorpus& corpus,
                    const std::vector<dataio::PairSample>& pairs);

/// Mean BCE reconstruction loss of an AE (or a VAE decoding its mean).
double reconstruction_loss(const Model& model, const dataio::FrameCorpus& corpus);

}  // namespace lvr::models
