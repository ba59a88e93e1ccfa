#pragma once

#include <cstdint>

#include "lvr/eval/eval.hpp"
#include "lvr/models/train.hpp"

namespace lvr::eval {

/// End-to-end synthetic run: the networks train on one visit of the
/// synthetic sites, the target index holds a second visit, and queries come
/// from a third.
struct BenchmarkConfig {
  std::uint64_t seed = 1;
  std::uint32_t n_clusters = 100;
  std::uint32_t frames_per_cluster = 10;
  std::uint32_t query_frames_per_cluster = 1;
  std::uint32_t image_size = 64;
  models::ArchConfig ae_arch = models::default_ae_config();
  models::ArchConfig vae_arch = models::default_vae_config();
  models::ArchConfig siamese_arch = models::default_siamese_config();
  models::TrainConfig ae_training = models::default_ae_training();
  models::TrainConfig vae_training = models::default_vae_training();
  models::TrainConfig siamese_training = models::default_siamese_training();
  std::size_t n_pairs = 4000;
  double similar_fraction = 0.5;
  EvalConfig eval;
};

struct BenchmarkRun {
  EvalReport report;
  models::TrainReport ae;
  models::TrainReport vae;
  models::TrainReport siamese;
  double seconds = 0.0;
};

BenchmarkRun run_benchmark(const BenchmarkConfig& config);

}  // namespace lvr::eval
