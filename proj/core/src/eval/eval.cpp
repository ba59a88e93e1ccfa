#include "lvr/eval/eval.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "lvr/error.hpp"
#include "lvr/rng.hpp"

namespace lvr::eval {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string base64(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

double precision_from_counts(std::uint64_t tp, std::uint64_t fp) {
  if (tp + fp == 0) throw ConfigError("precision undefined: tp + fp is zero");
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::ae:
      return "AE";
    case Method::vae:
      return "VAE";
    case Method::ae_siamese:
      return "AE-Siamese";
    case Method::vae_siamese:
      return "VAE-Siamese";
  }
  throw ConfigError("unknown method");
}

void EvalConfig::validate() const {
  if (n_queries == 0) throw ConfigError("n_queries must be at least 1");
  if (final_n == 0) throw ConfigError("final_n must be at least 1");
  if (candidate_k < final_n) throw ConfigError("candidate_k must be >= final_n");
  if (!(blend >= 0.0 && blend <= 1.0)) throw ConfigError("blend must lie in [0, 1]");
  if (threads == 0) throw ConfigError("threads must be at least 1");
}

const MethodCounts& EvalReport::counts(Method m) const {
  for (const auto& c : methods) {
    if (c.method == m) return c;
  }
  throw ConfigError("report has no row for " + to_string(m));
}

EvalReport evaluate(const dataio::FrameCorpus& queries, const dataio::FrameCorpus& targets,
                    const EvalModels& models, const EvalConfig& config) {
  config.validate();
  if (!models.ae || !models.vae || !models.siamese) {
    throw ConfigError("evaluate needs AE, VAE and Siamese models");
  }
  if (!queries.labeled() || !targets.labeled()) {
    throw DataError("evaluate needs labeled query and target corpora");
  }
  if (config.n_queries > queries.size()) {
    throw ConfigError("n_queries " + std::to_string(config.n_queries) + " exceeds the " +
                      std::to_string(queries.size()) + " available query frames");
  }
  if (targets.size() < config.final_n) {
    throw DataError("target corpus holds fewer frames than final_n");
  }

  std::vector<std::size_t> picks(queries.size());
  std::iota(picks.begin(), picks.end(), std::size_t{0});
  Rng rng(mix_seed(config.seed, 0xE7A1));
  rng.shuffle(picks);
  picks.resize(config.n_queries);
  std::sort(picks.begin(), picks.end(), [&](auto a, auto b) { return queries[a].id < queries[b].id; });

  index::LatentIndex ae_built, vae_built;
  const auto* ae_index = models.ae_index;
  const auto* vae_index = models.vae_index;
  if (!ae_index) {
    ae_built = index::build_index(*models.ae, targets).index;
    ae_index = &ae_built;
  }
  if (!vae_index) {
    vae_built = index::build_index(*models.vae, targets).index;
    vae_index = &vae_built;
  }

  std::map<std::string, std::vector<float>> embeddings;
  {
    std::vector<const dataio::Image*> frames;
    for (const auto& f : targets.frames()) frames.push_back(&f.pixels);
    auto emb = models.siamese->encode_all(frames);
    for (std::size_t i = 0; i < targets.size(); ++i) embeddings.emplace(targets[i].id, std::move(emb[i]));
  }
  const retrieval::CorpusSource source(targets);
  const retrieval::CorpusAccess access{&source, nullptr, nullptr, &embeddings};

  EvalReport report;
  report.config = config;
  for (auto m : kMethods) report.methods.push_back({m, 0, 0, 0.0});

  // One slot per (query, method); workers fill slots, assembly stays ordered.
  std::vector<QueryOutcome> slots(picks.size() * kMethods.size());
  const auto run_query = [&](std::size_t p) {
    const auto& q = queries[picks[p]];
    const auto cluster = queries.label(q.id).cluster_id;
    for (std::size_t mi = 0; mi < kMethods.size(); ++mi) {
      const auto method = kMethods[mi];
      const bool ae_side = method == Method::ae || method == Method::ae_siamese;
      retrieval::QueryRequest req;
      req.query_frame = &q.pixels;
      req.index = ae_side ? ae_index : vae_index;
      req.candidate_k = config.candidate_k;
      req.final_n = config.final_n;
      req.use_siamese = method == Method::ae_siamese || method == Method::vae_siamese;
      req.blend = config.blend;
      const retrieval::RetrievalModels rm{ae_side ? models.ae : models.vae, models.siamese};
      auto result = retrieval::retrieve(req, rm, access);

      auto& outcome = slots[p * kMethods.size() + mi];
      outcome.query_id = q.id;
      outcome.cluster_id = cluster;
      outcome.method = method;
      for (const auto& item : result.ranked) {
        const bool hit = targets.label(item.frame_id).cluster_id == cluster;
        outcome.relevant.push_back(hit);
        (hit ? outcome.tp : outcome.fp) += 1;
      }
      outcome.ranked = std::move(result.ranked);
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, picks.size()));
  if (workers == 1) {
    for (std::size_t p = 0; p < picks.size(); ++p) run_query(p);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t p; (p = next.fetch_add(1)) < picks.size();) {
          try {
            run_query(p);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto& row = report.methods[i % kMethods.size()];
    row.tp += slots[i].tp;
    row.fp += slots[i].fp;
  }
  report.per_query = std::move(slots);
  for (auto& c : report.methods) c.precision = precision_from_counts(c.tp, c.fp);
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::string out = "method,tp,fp,precision\n";
  for (const auto& c : report.methods) {
    out += to_string(c.method) + "," + std::to_string(c.tp) + "," + std::to_string(c.fp) + "," +
           format_double(c.precision) + "\n";
  }
  return out;
}

std::string breakdown_csv(const EvalReport& report) {
  std::string out = "query_id,method,rank,frame_id,l2_score,siamese_distance,relevant\n";
  for (const auto& q : report.per_query) {
    for (std::size_t i = 0; i < q.ranked.size(); ++i) {
      const auto& r = q.ranked[i];
      out += q.query_id + "," + to_string(q.method) + "," + std::to_string(r.final_rank) + "," + r.frame_id + "," +
             format_double(r.l2_score) + "," + (r.siamese_distance ? format_double(*r.siamese_distance) : "") + "," +
             (q.relevant[i] ? "1" : "0") + "\n";
    }
  }
  return out;
}

std::string compression_table(std::span<const index::CompressionStats> stats) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %10s %14s %14s %10s %10s\n", "index", "frames", "raw_bytes",
                "index_bytes", "ratio", "encode_s");
  os << line;
  for (const auto& s : stats) {
    const std::string ratio = s.ratio ? fixed(*s.ratio, 2) : "n/a";
    std::snprintf(line, sizeof(line), "%-10s %10llu %14llu %14llu %10s %10s\n", s.label.c_str(),
                  static_cast<unsigned long long>(s.n_frames), static_cast<unsigned long long>(s.raw_bytes),
                  static_cast<unsigned long long>(s.index_bytes), ratio.c_str(), fixed(s.encode_seconds, 3).c_str());
    os << line;
  }
  return os.str();
}

std::string compression_csv(std::span<const index::CompressionStats> stats) {
  std::string out = "label,n_frames,raw_bytes,index_bytes,ratio,encode_seconds\n";
  for (const auto& s : stats) {
    out += s.label + "," + std::to_string(s.n_frames) + "," + std::to_string(s.raw_bytes) + "," +
           std::to_string(s.index_bytes) + "," + (s.ratio ? format_double(*s.ratio) : "n/a") + "," +
           format_double(s.encode_seconds) + "\n";
  }
  return out;
}

std::vector<index::CompressionStats> parse_compression_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split(line, ',').size() != 6) throw DataError("stats CSV: bad header");
  std::vector<index::CompressionStats> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw DataError("stats CSV line " + std::to_string(lineno) + ": expected 6 fields");
    try {
      index::CompressionStats s;
      s.label = f[0];
      s.n_frames = std::stoull(f[1]);
      s.raw_bytes = std::stoull(f[2]);
      s.index_bytes = std::stoull(f[3]);
      if (f[4] != "n/a") s.ratio = std::stod(f[4]);
      s.encode_seconds = std::stod(f[5]);
      out.push_back(std::move(s));
    } catch (const std::logic_error&) {
      throw DataError("stats CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

std::string render_gallery_html(const std::vector<GalleryQuery>& queries, const retrieval::FrameSource& frames) {
  std::ostringstream os;
  os << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Retrieval gallery</title>\n"
     << "<style>body{font-family:sans-serif;background:#111;color:#ddd}"
     << "section{margin:1em 0;border-top:1px solid #444}"
     << ".row{display:flex;align-items:flex-start;gap:4px}"
     << ".row h3{width:8em;font-size:0.9em}"
     << "figure{margin:0;font-size:0.7em;text-align:center}"
     << "figure.query img{outline:2px solid #39f}"
     << "img{width:96px;height:96px;image-rendering:pixelated}</style></head><body>\n"
     << "<h1>Retrieval gallery</h1>\n";
  if (queries.empty()) {
    os << "<p class=\"empty\">No queries to show.</p>\n";
  }
  for (const auto& q : queries) {
    os << "<section>\n<h2>" << html_escape(q.query_id) << "</h2>\n"
       << "<figure class=\"query\"><img alt=\"query\" src=\"data:image/png;base64,"
       << base64(dataio::encode_png(q.query)) << "\"><figcaption>query</figcaption></figure>\n";
    for (const auto& row : q.rows) {
      os << "<div class=\"row\"><h3>" << html_escape(row.method) << "</h3>\n";
      for (const auto& item : row.ranked) {
        const auto px = frames.fetch(item.frame_id);
        if (!px) throw DataError("gallery: no pixels for '" + item.frame_id + "'");
        os << "<figure class=\"hit\"><img alt=\"" << html_escape(item.frame_id)
           << "\" src=\"data:image/png;base64," << base64(dataio::encode_png(*px)) << "\"><figcaption>#"
           << item.final_rank << " " << html_escape(item.frame_id) << "<br>l2 " << fixed(item.l2_score, 3);
        if (item.siamese_distance) os << " d " << fixed(*item.siamese_distance, 3);
        os << "</figcaption></figure>\n";
      }
      os << "</div>\n";
    }
    os << "</section>\n";
  }
  os << "</body></html>\n";
  return os.str();
}

void render_gallery(const std::vector<GalleryQuery>& queries, const retrieval::FrameSource& frames,
                    const std::filesystem::path& path) {
  const auto html = render_gallery_html(queries, frames);
  write_binary_file(path, std::span(reinterpret_cast<const std::uint8_t*>(html.data()), html.size()));
}

std::vector<GalleryQuery> gallery_from_report(const EvalReport& report, const dataio::FrameCorpus& queries,
                                              std::size_t limit) {
  std::vector<GalleryQuery> out;
  for (const auto& q : report.per_query) {
    if (out.empty() || out.back().query_id != q.query_id) {
      if (out.size() == limit) break;
      const auto* px = queries.pixels(q.query_id);
      if (!px) throw DataError("gallery: query '" + q.query_id + "' not in the query corpus");
      out.push_back({q.query_id, *px, {}});
    }
    out.back().rows.push_back({to_string(q.method), q.ranked});
  }
  return out;
}

}  // namespace lvr::eval
