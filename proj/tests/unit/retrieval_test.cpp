#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "lvr/dataio/synth.hpp"
#include "lvr/error.hpp"
#include "lvr/index/index.hpp"
#include "lvr/retrieval/retrieval.hpp"
#include "lvr/rng.hpp"

using namespace lvr;
using namespace lvr::retrieval;
using index::LatentIndex;

namespace {

models::ArchConfig tiny_arch(std::uint32_t latent) {
  models::ArchConfig a;
  a.input_size = 32;
  a.channels = {4, 8, 8};
  a.latent_dim = latent;
  return a;
}

dataio::FrameCorpus corpus_of(std::uint32_t clusters, std::uint32_t per_cluster) {
  dataio::SynthConfig c;
  c.n_clusters = clusters;
  c.frames_per_cluster = per_cluster;
  c.image_size = 32;
  c.seed = 21;
  return dataio::generate_synthetic(c);
}

LatentIndex random_index(std::size_t n, std::uint32_t dim, Rng& rng) {
  LatentIndex idx;
  idx.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    index::IndexEntry e{"id" + std::to_string(100000 + i), std::vector<float>(dim)};
    for (auto& v : e.latent) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    idx.entries.push_back(std::move(e));
  }
  return idx;
}

std::vector<float> random_vec(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

double naive_l2(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (static_cast<double>(a[i]) - b[i]) * (static_cast<double>(a[i]) - b[i]);
  return std::sqrt(s);
}

// Full sort of every entry by (distance, id), then the first k ids.
std::vector<std::string> brute_force(std::span<const float> q, const LatentIndex& idx, std::size_t k) {
  std::vector<std::pair<double, std::string>> all;
  for (const auto& e : idx.entries) all.emplace_back(naive_l2(q, e.latent), e.frame_id);
  std::sort(all.begin(), all.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
  return out;
}

std::vector<std::string> ids(const std::vector<Candidate>& c) {
  std::vector<std::string> out;
  for (const auto& x : c) out.push_back(x.frame_id);
  return out;
}

std::vector<std::string> ids(const std::vector<RankedItem>& c) {
  std::vector<std::string> out;
  for (const auto& x : c) out.push_back(x.frame_id);
  return out;
}

// Shared fixture: a small labeled corpus, untrained models and AE index.
struct World {
  dataio::FrameCorpus corpus = corpus_of(6, 4);
  models::Model ae{models::make_spec(models::ModelKind::ae, tiny_arch(16)), 31};
  models::Model siamese{models::make_spec(models::ModelKind::siamese, tiny_arch(8)), 32};
  LatentIndex idx = index::build_index(ae, corpus).index;
  CorpusSource source{corpus};
  CorpusAccess access{&source, &ae, &idx, nullptr};
};

}  // namespace

TEST(L2, Examples) {
  const std::vector<float> a{0, 0}, b{3, 4};
  EXPECT_EQ(l2_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(l2_distance(a, b), 5.0);
  const std::vector<float> c{1, 2, 3};
  EXPECT_THROW(l2_distance(a, c), ShapeError);
}

TEST(L2, MatchesNaiveSum) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_vec(rng, 32), b = random_vec(rng, 32);
    EXPECT_NEAR(l2_distance(a, b), naive_l2(a, b), 1e-6);
  }
}

TEST(Knn, MatchesFullSortOracle) {
  Rng rng(2);
  const auto idx = random_index(500, 32, rng);
  for (int q = 0; q < 20; ++q) {
    const auto query = random_vec(rng, 32);
    for (std::size_t k : {1u, 10u, 100u}) EXPECT_EQ(ids(knn_candidates(query, idx, k)), brute_force(query, idx, k));
  }
}

TEST(Knn, FullKIsSortedAscending) {
  Rng rng(3);
  const auto idx = random_index(40, 4, rng);
  const auto all = knn_candidates(random_vec(rng, 4), idx, idx.size());
  ASSERT_EQ(all.size(), idx.size());
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LE(all[i - 1].l2_score, all[i].l2_score);
}

TEST(Knn, StoredLatentRanksFirstWithZero) {
  Rng rng(4);
  const auto idx = random_index(30, 8, rng);
  const auto top = knn_candidates(idx.entries[17].latent, idx, 3);
  EXPECT_EQ(top[0].frame_id, idx.entries[17].frame_id);
  EXPECT_EQ(top[0].l2_score, 0.0);
}

TEST(Knn, TiesBreakByFrameId) {
  LatentIndex idx;
  idx.dim = 2;
  for (const char* id : {"a", "b", "c", "d"}) idx.entries.push_back({id, {1.0f, 0.0f}});
  idx.entries[1].latent = {0.0f, 1.0f};
  const std::vector<float> q{0.0f, 0.0f};
  EXPECT_EQ(ids(knn_candidates(q, idx, 4)), (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_EQ(ids(knn_candidates(q, idx, 2)), (std::vector<std::string>{"a", "b"}));
}

TEST(Knn, DimensionMismatchIsRejected) {
  Rng rng(5);
  const auto idx = random_index(5, 4, rng);
  EXPECT_THROW(knn_candidates(random_vec(rng, 3), idx, 2), ShapeError);
}

TEST(Rerank, SingleCandidateUnchanged) {
  World w;
  const std::vector<Candidate> one{{w.corpus[3].id, 0.7}};
  const auto out = rerank(one, w.corpus[0].pixels, w.siamese, w.access);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].frame_id, w.corpus[3].id);
  EXPECT_EQ(out[0].final_rank, 1u);
}

TEST(Rerank, MatchesRecomputeAndSortOracle) {
  World w;
  const auto& query = w.corpus[5].pixels;
  const auto cands = knn_candidates(w.ae.encode(query), w.idx, 15);
  const auto out = rerank(cands, query, w.siamese, w.access);

  std::vector<std::tuple<double, double, std::string>> oracle;
  for (const auto& c : cands) oracle.emplace_back(models::siamese_distance(w.siamese, query, *w.corpus.pixels(c.frame_id)), c.l2_score, c.frame_id);
  std::sort(oracle.begin(), oracle.end());
  ASSERT_EQ(out.size(), oracle.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].frame_id, std::get<2>(oracle[i]));
    EXPECT_EQ(out[i].final_rank, i + 1);
    ASSERT_TRUE(out[i].siamese_distance.has_value());
    EXPECT_NEAR(*out[i].siamese_distance, std::get<0>(oracle[i]), 1e-9);
  }
  // The query itself is among the candidates and comes first.
  EXPECT_EQ(out[0].frame_id, w.corpus[5].id);
  EXPECT_LE(*out[0].siamese_distance, 1e-6);
}

TEST(Rerank, IsAPermutation) {
  World w;
  const auto cands = knn_candidates(w.ae.encode(w.corpus[2].pixels), w.idx, 12);
  const auto out = rerank(cands, w.corpus[9].pixels, w.siamese, w.access);
  std::multiset<std::string> before, after;
  for (const auto& c : cands) before.insert(c.frame_id);
  for (const auto& r : out) after.insert(r.frame_id);
  EXPECT_EQ(before, after);
}

TEST(Rerank, EmbeddingCacheGivesSameOrder) {
  World w;
  std::map<std::string, std::vector<float>> cache;
  for (const auto& f : w.corpus.frames()) cache[f.id] = w.siamese.encode(f.pixels);
  const auto cands = knn_candidates(w.ae.encode(w.corpus[1].pixels), w.idx, 10);
  const auto plain = rerank(cands, w.corpus[1].pixels, w.siamese, w.access);
  CorpusAccess cached = w.access;
  cached.embeddings = &cache;
  EXPECT_EQ(ids(rerank(cands, w.corpus[1].pixels, w.siamese, cached)), ids(plain));
}

TEST(Rerank, BlendOneFollowsL2) {
  World w;
  const auto cands = knn_candidates(w.ae.encode(w.corpus[4].pixels), w.idx, 10);
  EXPECT_EQ(ids(rerank(cands, w.corpus[4].pixels, w.siamese, w.access, 1.0)), ids(cands));
}

TEST(Rerank, MissingPixelsNameTheFrame) {
  World w;
  const std::vector<Candidate> ghost{{"no_such_frame", 0.1}};
  CorpusAccess no_decoder{&w.source, nullptr, nullptr, nullptr};
  try {
    rerank(ghost, w.corpus[0].pixels, w.siamese, no_decoder);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no_such_frame"), std::string::npos) << e.what();
  }
}

TEST(Rerank, DecoderFallbackIsFlagged) {
  World w;
  dataio::FrameCorpus empty;
  CorpusSource none(empty);
  CorpusAccess fallback{&none, &w.ae, &w.idx, nullptr};
  const auto cands = knn_candidates(w.ae.encode(w.corpus[0].pixels), w.idx, 4);
  const auto out = rerank(cands, w.corpus[0].pixels, w.siamese, fallback);
  ASSERT_EQ(out.size(), 4u);
  for (const auto& r : out) EXPECT_TRUE(r.reconstructed);

  QueryRequest req{&w.corpus[0].pixels, &w.idx, 4, 4, true, 0.0};
  EXPECT_TRUE(retrieve(req, {&w.ae, &w.siamese}, fallback).used_fallback);
  EXPECT_FALSE(retrieve(req, {&w.ae, &w.siamese}, w.access).used_fallback);
}

TEST(Retrieve, WithoutSiameseEqualsKnn) {
  World w;
  const auto& q = w.corpus[7].pixels;
  QueryRequest req{&q, &w.idx, 12, 12, false, 0.0};
  const auto res = retrieve(req, {&w.ae, nullptr}, w.access);
  const auto knn = knn_candidates(w.ae.encode(q), w.idx, 12);
  ASSERT_EQ(res.ranked.size(), knn.size());
  for (std::size_t i = 0; i < knn.size(); ++i) {
    EXPECT_EQ(res.ranked[i].frame_id, knn[i].frame_id);
    EXPECT_EQ(res.ranked[i].l2_score, knn[i].l2_score);
  }
  EXPECT_TRUE(res.warnings.empty());
}

TEST(Retrieve, IndexedFrameIsInTopTen) {
  World w;
  for (std::size_t i = 0; i < w.corpus.size(); i += 5) {
    QueryRequest req{&w.corpus[i].pixels, &w.idx, 20, 10, true, 0.0};
    const auto got = ids(retrieve(req, {&w.ae, &w.siamese}, w.access).ranked);
    EXPECT_NE(std::find(got.begin(), got.end(), w.corpus[i].id), got.end());
  }
}

TEST(Retrieve, ClampsWithWarning) {
  World w;
  QueryRequest req{&w.corpus[0].pixels, &w.idx, 100, 10, false, 0.0};
  const auto res = retrieve(req, {&w.ae, nullptr}, w.access);
  EXPECT_EQ(res.ranked.size(), 10u);
  ASSERT_EQ(res.warnings.size(), 1u);
  EXPECT_NE(res.warnings[0].find("clamped"), std::string::npos);
}

TEST(Retrieve, ChecksumMismatchIsRejected) {
  World w;
  const models::Model other(models::make_spec(models::ModelKind::ae, tiny_arch(16)), 99);
  QueryRequest req{&w.corpus[0].pixels, &w.idx, 5, 5, false, 0.0};
  EXPECT_THROW(retrieve(req, {&other, nullptr}, w.access), DataError);
}

TEST(Retrieve, TruncationIsAPrefixAndDeterministic) {
  World w;
  const auto& q = w.corpus[11].pixels;
  QueryRequest wide{&q, &w.idx, 20, 12, true, 0.0};
  QueryRequest narrow{&q, &w.idx, 20, 5, true, 0.0};
  const auto a = retrieve(wide, {&w.ae, &w.siamese}, w.access);
  const auto b = retrieve(narrow, {&w.ae, &w.siamese}, w.access);
  EXPECT_EQ(std::vector<RankedItem>(a.ranked.begin(), a.ranked.begin() + 5), b.ranked);
  EXPECT_EQ(retrieve(wide, {&w.ae, &w.siamese}, w.access).ranked, a.ranked);
}

TEST(Retrieve, TimingsAreConsistent) {
  World w;
  QueryRequest req{&w.corpus[0].pixels, &w.idx, 24, 10, true, 0.0};
  const auto t = retrieve(req, {&w.ae, &w.siamese}, w.access).timings;
  EXPECT_GE(t.encode_s, 0.0);
  EXPECT_GE(t.search_s, 0.0);
  EXPECT_GE(t.rerank_s, 0.0);
  const double parts = t.encode_s + t.search_s + t.rerank_s;
  EXPECT_LE(parts, t.total_s);
  EXPECT_GE(parts, 0.9 * t.total_s);
}
