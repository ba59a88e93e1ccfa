#include "lvr/retrieval/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "lvr/error.hpp"

namespace lvr::retrieval {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

// Squared distance accumulated in double over f32 components.
double squared_l2(const float* a, const float* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

}  // namespace

double l2_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ShapeError("l2_distance: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  return std::sqrt(squared_l2(a.data(), b.data(), a.size()));
}

std::vector<Candidate> knn_candidates(std::span<const float> query, const index::LatentIndex& index,
                                      std::size_t k) {
  if (query.size() != index.dim) {
    throw ShapeError("knn_candidates: query has " + std::to_string(query.size()) + " values, index dim is " +
                     std::to_string(index.dim));
  }
  struct Scored {
    double d2;
    std::size_t i;
  };
  std::vector<Scored> all(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    all[i] = {squared_l2(query.data(), index.entries[i].latent.data(), index.dim), i};
  }
  // Entries are sorted by frame id, so position breaks ties by id.
  const auto less = [](const Scored& a, const Scored& b) { return a.d2 < b.d2 || (a.d2 == b.d2 && a.i < b.i); };
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
  std::vector<Candidate> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) out.push_back({index.entries[all[j].i].frame_id, std::sqrt(all[j].d2)});
  return out;
}

std::optional<dataio::Image> CorpusSource::fetch(const std::string& frame_id) const {
  const auto* p = corpus_->pixels(frame_id);
  if (!p) return std::nullopt;
  return *p;
}

std::optional<dataio::Image> DirectorySource::fetch(const std::string& frame_id) const {
  for (const char* ext : {".png", ".ppm"}) {
    const auto path = dir_ / (frame_id + ext);
    if (std::filesystem::exists(path)) return dataio::decode_image(path);
  }
  return std::nullopt;
}

std::vector<RankedItem> rerank(const std::vector<Candidate>& candidates, const dataio::Image& query,
                               const models::Model& siamese, const CorpusAccess& access, double blend) {
  if (siamese.kind() != models::ModelKind::siamese) throw ConfigError("rerank needs a siamese model");
  if (!(blend >= 0.0 && blend <= 1.0)) throw ConfigError("rerank blend must lie in [0, 1]");

  std::vector<RankedItem> items(candidates.size());
  std::vector<std::vector<float>> emb(candidates.size());
  std::vector<dataio::Image> fetched;
  std::vector<std::size_t> fetched_at;
  fetched.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    items[i].frame_id = c.frame_id;
    items[i].l2_score = c.l2_score;
    if (access.embeddings) {
      if (auto it = access.embeddings->find(c.frame_id); it != access.embeddings->end()) {
        emb[i] = it->second;
        continue;
      }
    }
    std::optional<dataio::Image> px;
    if (access.frames) px = access.frames->fetch(c.frame_id);
    if (!px && access.decoder && access.latents) {
      if (const auto* e = access.latents->find(c.frame_id)) {
        px = access.decoder->decode(e->latent);
        items[i].reconstructed = true;
      }
    }
    if (!px) throw DataError("rerank: no pixels for candidate '" + c.frame_id + "'");
    fetched.push_back(std::move(*px));
    fetched_at.push_back(i);
  }
  if (!fetched.empty()) {
    std::vector<const dataio::Image*> ptrs;
    for (const auto& f : fetched) ptrs.push_back(&f);
    auto computed = siamese.encode_all(ptrs);
    for (std::size_t j = 0; j < fetched_at.size(); ++j) emb[fetched_at[j]] = std::move(computed[j]);
  }

  const auto q = siamese.encode(query);
  std::vector<double> key(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double d = models::embedding_distance(q, emb[i]);
    items[i].siamese_distance = d;
    key[i] = blend == 0.0 ? d : (1.0 - blend) * d + blend * items[i].l2_score;
  }
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return key[a] < key[b];
    if (items[a].l2_score != items[b].l2_score) return items[a].l2_score < items[b].l2_score;
    return items[a].frame_id < items[b].frame_id;
  });
  std::vector<RankedItem> out;
  out.reserve(items.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    out.push_back(std::move(items[order[r]]));
    out.back().final_rank = r + 1;
  }
  return out;
}

RetrievalResult retrieve(const QueryRequest& request, const RetrievalModels& models,
                         const CorpusAccess& access) {
  const auto start = Clock::now();
  if (!request.query_frame || !request.index) throw ConfigError("retrieve: query frame and index are required");
  if (!models.encoder) throw ConfigError("retrieve: an encoder model is required");
  const auto& index = *request.index;
  const auto& encoder = *models.encoder;
  if (encoder.kind() != index.model_kind) {
    throw DataError("retrieve: index holds " + models::to_string(index.model_kind) + " latents but the encoder is " +
                    models::to_string(encoder.kind()));
  }
  if (encoder.checksum() != index.model_checksum) {
    throw DataError("retrieve: index checksum does not match the encoder weights");
  }
  if (request.use_siamese && !models.siamese) throw ConfigError("retrieve: use_siamese needs a siamese model");
  if (request.final_n == 0) throw ConfigError("retrieve: final_n must be at least 1");
  if (request.candidate_k < request.final_n) throw ConfigError("retrieve: candidate_k must be >= final_n");
  if (index.size() == 0) throw DataError("retrieve: index is empty");

  RetrievalResult result;
  std::size_t k = request.candidate_k;
  std::size_t n = request.final_n;
  if (k > index.size()) {
    result.warnings.push_back("candidate_k " + std::to_string(k) + " clamped to index size " +
                              std::to_string(index.size()));
    k = index.size();
  }
  if (n > k) {
    result.warnings.push_back("final_n " + std::to_string(n) + " clamped to " + std::to_string(k));
    n = k;
  }

  auto t = Clock::now();
  const auto z = encoder.kind() == models::ModelKind::ae ? models::ae_encode(encoder, *request.query_frame)
                                                         : models::vae_encode_mu(encoder, *request.query_frame);
  result.timings.encode_s = seconds_since(t);

  t = Clock::now();
  const auto candidates = knn_candidates(z, index, k);
  result.timings.search_s = seconds_since(t);

  if (request.use_siamese) {
    t = Clock::now();
    result.ranked = rerank(candidates, *request.query_frame, *models.siamese, access, request.blend);
    result.timings.rerank_s = seconds_since(t);
  } else {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      result.ranked.push_back({candidates[i].frame_id, candidates[i].l2_score, std::nullopt, i + 1, false});
    }
  }
  result.ranked.resize(n);
  result.used_fallback = std::any_of(result.ranked.begin(), result.ranked.end(),
                                     [](const RankedItem& r) { return r.reconstructed; });
  result.timings.total_s = seconds_since(start);
  return result;
}

}  // namespace lvr::retrieval
