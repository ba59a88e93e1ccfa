#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "lvr/dataio/synth.hpp"
#include "lvr/index/index.hpp"
#include "lvr/models/model.hpp"
#include "lvr/nn/ops.hpp"
#include "lvr/retrieval/retrieval.hpp"
#include "lvr/rng.hpp"

using namespace lvr;

namespace {

nn::Tensor<float> random_tensor(Rng& rng, nn::Shape shape) {
  nn::Tensor<float> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(rng.normal() * 0.1);
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const auto x = nn::make_leaf(random_tensor(rng, {8, c, hw, hw}));
  const auto k = nn::make_leaf(random_tensor(rng, {2 * c, c, 3, 3}));
  const auto b = nn::make_leaf(random_tensor(rng, {2 * c}));
  for (auto _ : state) {
    nn::Tape<float> tape(nn::Tape<float>::Mode::inference);
    benchmark::DoNotOptimize(nn::conv2d(tape, x, k, b, 2));
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Conv2dForward)->Args({3, 64})->Args({16, 32})->Args({32, 16})->Unit(benchmark::kMicrosecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  Rng rng(2);
  const auto x = nn::make_leaf(random_tensor(rng, {8, c, hw, hw}), true);
  const auto k = nn::make_leaf(random_tensor(rng, {2 * c, c, 3, 3}), true);
  const auto b = nn::make_leaf(random_tensor(rng, {2 * c}), true);
  for (auto _ : state) {
    nn::Tape<float> tape;
    const auto y = nn::conv2d(tape, x, k, b, 2);
    tape.backward(nn::sum(tape, y));
    benchmark::DoNotOptimize(k->grad.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Conv2dBackward)->Args({3, 64})->Args({16, 32})->Args({32, 16})->Unit(benchmark::kMicrosecond);

void BM_KnnCandidates(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  Rng rng(3);
  index::LatentIndex idx;
  idx.dim = 32;
  for (std::size_t i = 0; i < n; ++i) {
    index::IndexEntry e{"f" + std::to_string(i), std::vector<float>(32)};
    for (auto& v : e.latent) v = static_cast<float>(rng.normal());
    idx.entries.push_back(std::move(e));
  }
  std::vector<float> q(32);
  for (auto& v : q) v = static_cast<float>(rng.normal());
  for (auto _ : state) benchmark::DoNotOptimize(retrieval::knn_candidates(q, idx, k));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_KnnCandidates)->Args({1000, 10})->Args({1000, 100})->Args({100000, 100});

void BM_Encode(benchmark::State& state) {
  const auto kind = static_cast<models::ModelKind>(state.range(0));
  const auto arch = kind == models::ModelKind::ae ? models::default_ae_config() : models::default_vae_config();
  const models::Model model(models::make_spec(kind, arch), 4);
  dataio::SynthConfig sc;
  sc.n_clusters = 1;
  sc.frames_per_cluster = 1;
  const auto corpus = dataio::generate_synthetic(sc);
  const auto& frame = corpus[0].pixels;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kind == models::ModelKind::ae ? models::ae_encode(model, frame)
                                                           : models::vae_encode_mu(model, frame));
  }
}
BENCHMARK(BM_Encode)
    ->Arg(static_cast<int>(models::ModelKind::ae))
    ->Arg(static_cast<int>(models::ModelKind::vae))
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
