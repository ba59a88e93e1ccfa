#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvr/dataio/corpus.hpp"
#include "lvr/index/index.hpp"
#include "lvr/models/model.hpp"

namespace lvr::retrieval {

/// Euclidean norm of a - b; ShapeError on a length mismatch.
double l2_distance(std::span<const float> a, std::span<const float> b);

struct Candidate {
  std::string frame_id;
  double l2_score = 0.0;

  bool operator==(const Candidate&) const = default;
};

/// The k nearest entries by L2, ascending, ties broken by frame id. Exact.
std::vector<Candidate> knn_candidates(std::span<const float> query, const index::LatentIndex& index,
                                      std::size_t k);

/// Maps frame ids to pixels.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Pixels of the frame, or nullopt when the source does not hold it.
  virtual std::optional<dataio::Image> fetch(const std::string& frame_id) const = 0;
};

class CorpusSource final : public FrameSource {
 public:
  explicit CorpusSource(const dataio::FrameCorpus& corpus) : corpus_(&corpus) {}
  std::optional<dataio::Image> fetch(const std::string& frame_id) const override;

 private:
  const dataio::FrameCorpus* corpus_;
};

/// Reads <dir>/<frame_id>.png or .ppm on demand.
class DirectorySource final : public FrameSource {
 public:
  explicit DirectorySource(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::optional<dataio::Image> fetch(const std::string& frame_id) const override;

 private:
  std::filesystem::path dir_;
};

/// What the re-ranker may use to obtain candidate pixels and embeddings.
struct CorpusAccess {
  const FrameSource* frames = nullptr;
  /// Degraded fallback for frames the source lacks: decode the stored latent.
  const models::Model* decoder = nullptr;
  const index::LatentIndex* latents = nullptr;
  /// Precomputed Siamese embeddings keyed by frame id (optional cache).
  const std::map<std::string, std::vector<float>>* embeddings = nullptr;
};

struct RankedItem {
  std::string frame_id;
  double l2_score = 0.0;
  std::optional<double> siamese_distance;
  std::size_t final_rank = 0;
  /// Pixels came from the decoder fallback rather than the frame source.
  bool reconstructed = false;

  bool operator==(const RankedItem&) const = default;
};

/// Re-orders candidates by Siamese distance to the query (ties: l2_score, then
/// frame id). With blend b > 0 the key is (1-b)*siamese + b*l2. final_rank
/// is assigned 1..n. DataError names a candidate whose pixels are missing.
std::vector<RankedItem> rerank(const std::vector<Candidate>& candidates, const dataio::Image& query,
                               const models::Model& siamese, const CorpusAccess& access,
                               double blend = 0.0);

struct QueryRequest {
  const dataio::Image* query_frame = nullptr;
  const index::LatentIndex* index = nullptr;
  std::size_t candidate_k = 100;
  std::size_t final_n = 10;
  bool use_siamese = false;
  double blend = 0.0;
};

struct Timings {
  double encode_s = 0.0;
  double search_s = 0.0;
  double rerank_s = 0.0;
  double total_s = 0.0;
};

struct RetrievalResult {
  std::vector<RankedItem> ranked;
  Timings timings;
  bool used_fallback = false;
  std::vector<std::string> warnings;
};

struct RetrievalModels {
  const models::Model* encoder = nullptr;  // AE or VAE matching the index
  const models::Model* siamese = nullptr;  // required when use_siamese
};

/// encode -> knn_candidates(candidate_k) -> optional rerank -> first final_n.
/// candidate_k and final_n are clamped to the index size with a warning.
RetrievalResult retrieve(const QueryRequest& request, const RetrievalModels& models,
                         const CorpusAccess& access);

}  // namespace lvr::retrieval
