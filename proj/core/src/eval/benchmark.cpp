#include "lvr/eval/benchmark.hpp"

#include <chrono>

#include "lvr/dataio/synth.hpp"
#include "lvr/rng.hpp"

namespace lvr::eval {

BenchmarkRun run_benchmark(const BenchmarkConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  dataio::SynthConfig synth;
  synth.n_clusters = config.n_clusters;
  synth.frames_per_cluster = config.frames_per_cluster;
  synth.image_size = config.image_size;
  synth.seed = config.seed;

  synth.visit = 0;
  const auto train = dataio::generate_synthetic(synth);
  synth.visit = 1;
  const auto targets = dataio::generate_synthetic(synth);
  synth.visit = 2;
  synth.frames_per_cluster = config.query_frames_per_cluster;
  const auto queries = dataio::generate_synthetic(synth);

  BenchmarkRun run;
  auto ae_cfg = config.ae_training;
  auto vae_cfg = config.vae_training;
  auto siamese_cfg = config.siamese_training;
  ae_cfg.seed = mix_seed(config.seed, 1);
  vae_cfg.seed = mix_seed(config.seed, 2);
  siamese_cfg.seed = mix_seed(config.seed, 3);

  models::Model ae(models::make_spec(models::ModelKind::ae, config.ae_arch), ae_cfg.seed);
  run.ae = models::ae_train(ae, train, ae_cfg);
  models::Model vae(models::make_spec(models::ModelKind::vae, config.vae_arch), vae_cfg.seed);
  run.vae = models::vae_train(vae, train, vae_cfg);
  models::Model siamese(models::make_spec(models::ModelKind::siamese, config.siamese_arch), siamese_cfg.seed);
  const auto pairs = dataio::sample_pairs(train, config.n_pairs, config.similar_fraction, mix_seed(config.seed, 4));
  run.siamese = models::siamese_train(siamese, train, pairs, siamese_cfg);

  auto eval_cfg = config.eval;
  eval_cfg.seed = mix_seed(config.seed, 5);
  run.report = evaluate(queries, targets, {&ae, &vae, &siamese, nullptr, nullptr}, eval_cfg);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

}  // namespace lvr::eval
