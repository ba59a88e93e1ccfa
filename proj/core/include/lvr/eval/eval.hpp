#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lvr/dataio/corpus.hpp"
#include "lvr/index/index.hpp"
#include "lvr/models/model.hpp"
#include "lvr/retrieval/retrieval.hpp"

namespace lvr::eval {

/// tp / (tp + fp); ConfigError when both are zero.
double precision_from_counts(std::uint64_t tp, std::uint64_t fp);

enum class Method : std::uint8_t { ae, vae, ae_siamese, vae_siamese };

inline constexpr std::array<Method, 4> kMethods = {Method::ae, Method::vae, Method::ae_siamese,
                                                   Method::vae_siamese};

/// "AE", "VAE", "AE-Siamese", "VAE-Siamese".
std::string to_string(Method m);

struct EvalConfig {
  std::size_t n_queries = 49;
  std::size_t final_n = 10;
  std::size_t candidate_k = 100;
  double blend = 0.0;
  /// Selects which query frames are sampled.
  std::uint64_t seed = 1;
  /// Queries run on this many worker threads; results are assembled in order.
  std::size_t threads = 1;

  void validate() const;
};

struct EvalModels {
  const models::Model* ae = nullptr;
  const models::Model* vae = nullptr;
  const models::Model* siamese = nullptr;
  /// Prebuilt target indexes; built from the target corpus when null.
  const index::LatentIndex* ae_index = nullptr;
  const index::LatentIndex* vae_index = nullptr;
};

struct QueryOutcome {
  std::string query_id;
  std::int64_t cluster_id = 0;
  Method method = Method::ae;
  std::vector<retrieval::RankedItem> ranked;
  std::vector<bool> relevant;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
};

struct MethodCounts {
  Method method = Method::ae;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  double precision = 0.0;
};

struct EvalReport {
  EvalConfig config;
  /// One row per method in kMethods order.
  std::vector<MethodCounts> methods;
  /// Ordered by query id, then method.
  std::vector<QueryOutcome> per_query;

  const MethodCounts& counts(Method m) const;
};

/// Samples n_queries labeled frames from `queries`, retrieves each against the
/// target corpus with all four methods, and counts a hit as TP iff its cluster
/// matches the query's.
EvalReport evaluate(const dataio::FrameCorpus& queries, const dataio::FrameCorpus& targets,
                    const EvalModels& models, const EvalConfig& config);

/// "method,tp,fp,precision" plus one row per method.
std::string report_csv(const EvalReport& report);
/// "query_id,method,rank,frame_id,l2_score,siamese_distance,relevant".
std::string breakdown_csv(const EvalReport& report);

/// Human-readable table of index statistics; a missing ratio prints "n/a".
std::string compression_table(std::span<const index::CompressionStats> stats);
/// "label,n_frames,raw_bytes,index_bytes,ratio,encode_seconds".
std::string compression_csv(std::span<const index::CompressionStats> stats);
std::vector<index::CompressionStats> parse_compression_csv(const std::string& text);

struct GalleryRow {
  std::string method;
  std::vector<retrieval::RankedItem> ranked;
};

struct GalleryQuery {
  std::string query_id;
  dataio::Image query;
  std::vector<GalleryRow> rows;
};

/// Self-contained HTML page: one section per query, one row per method, images
/// inlined as base64 PNG. Hit pixels come from `frames`.
std::string render_gallery_html(const std::vector<GalleryQuery>& queries, const retrieval::FrameSource& frames);
void render_gallery(const std::vector<GalleryQuery>& queries, const retrieval::FrameSource& frames,
                    const std::filesystem::path& path);

/// Gallery input for the first `limit` queries of a report.
std::vector<GalleryQuery> gallery_from_report(const EvalReport& report, const dataio::FrameCorpus& queries,
                                              std::size_t limit);

}  // namespace lvr::eval
