// lvr: synthetic data, training, indexing, retrieval and evaluation.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "lvr/dataio/corpus.hpp"
#include "lvr/dataio/synth.hpp"
#include "lvr/error.hpp"
#include "lvr/eval/config.hpp"
#include "lvr/eval/eval.hpp"
#include "lvr/index/index.hpp"
#include "lvr/models/model.hpp"
#include "lvr/models/train.hpp"
#include "lvr/retrieval/retrieval.hpp"

namespace fs = std::filesystem;
using namespace lvr;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

struct Globals {
  std::string config_path;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  eval::Config config;
};

// Flag value when given on the command line, else the config key, else the default.
template <typename T>
T pick(const CLI::Option* opt, const T& flag, const eval::Config& cfg, const std::string& key, const T& fallback) {
  if (opt && opt->count() > 0) return flag;
  if constexpr (std::is_same_v<T, std::string>) {
    return cfg.get_string(key, fallback);
  } else if constexpr (std::is_same_v<T, double>) {
    return cfg.get_double(key, fallback);
  } else if constexpr (std::is_same_v<T, bool>) {
    return cfg.get_bool(key, fallback);
  } else {
    return static_cast<T>(cfg.get_u64(key, fallback));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  write_binary_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_binary_file(path);
  return std::string(bytes.begin(), bytes.end());
}

fs::path stats_path(const fs::path& index_path) { return fs::path(index_path.string() + ".stats.csv"); }

dataio::FrameCorpus load_labeled(const fs::path& dir) {
  const auto manifest = dir / "manifest.csv";
  return dataio::load_corpus(dir, fs::exists(manifest) ? std::optional(manifest) : std::nullopt);
}

// Architecture and training knobs shared by the three train-* commands.
struct NetOptions {
  std::uint32_t latent_dim = 0, input_size = 0, epochs = 0, batch_size = 0, iterations = 0;
  double learning_rate = 0.0;
  std::string channels;
  CLI::Option *o_latent = nullptr, *o_input = nullptr, *o_epochs = nullptr, *o_batch = nullptr,
              *o_iter = nullptr, *o_lr = nullptr, *o_channels = nullptr;

  void add(CLI::App* app, const char* latent_flag) {
    o_latent = app->add_option(latent_flag, latent_dim, "Latent / embedding width");
    o_input = app->add_option("--input-size", input_size, "Square input resolution");
    o_channels = app->add_option("--channels", channels, "Encoder channels, e.g. 16,32,64");
    o_epochs = app->add_option("--epochs", epochs, "Training epochs");
    o_batch = app->add_option("--batch-size", batch_size, "Minibatch size");
    o_iter = app->add_option("--iterations", iterations, "Minibatch steps per epoch (0 = one pass)");
    o_lr = app->add_option("--lr", learning_rate, "Learning rate");
  }

  void apply(const eval::Config& cfg, const std::string& ns, models::ArchConfig& arch,
             models::TrainConfig& train) const {
    arch.latent_dim = pick(o_latent, latent_dim, cfg, ns + ".latent_dim", arch.latent_dim);
    arch.input_size = pick(o_input, input_size, cfg, ns + ".input_size", arch.input_size);
    const auto ch = pick<std::string>(o_channels, channels, cfg, ns + ".channels", "");
    if (!ch.empty()) {
      eval::Config tmp;
      tmp.set("c", ch);
      const auto v = tmp.get_doubles("c", {});
      if (v.size() != 3) throw ConfigError(ns + ".channels needs three values");
      for (std::size_t i = 0; i < 3; ++i) arch.channels[i] = static_cast<std::uint32_t>(v[i]);
    }
    train.epochs = pick(o_epochs, epochs, cfg, ns + ".epochs", train.epochs);
    train.batch_size = pick(o_batch, batch_size, cfg, ns + ".batch_size", train.batch_size);
    train.iterations_per_epoch = pick(o_iter, iterations, cfg, ns + ".iterations", train.iterations_per_epoch);
    train.learning_rate = pick(o_lr, learning_rate, cfg, ns + ".learning_rate", train.learning_rate);
  }
};

void print_progress(const char* what, std::uint32_t epoch, double loss, std::uint32_t total) {
  if (epoch + 1 == total || epoch % 10 == 0) {
    std::fprintf(stderr, "%s epoch %u/%u loss %.6f\n", what, epoch + 1, total, loss);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-space frame compression and retrieval"};
  app.require_subcommand(1);
  Globals g;
  auto* o_seed = app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--config", g.config_path, "Flat key = value config file");
  app.add_option("--threads", g.threads, "Worker threads for evaluation")->check(CLI::PositiveNumber);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic labeled corpus (PNG + manifest.csv)");
  std::string gen_out;
  dataio::SynthConfig synth;
  std::string angles;
  gen->add_option("--out", gen_out, "Output directory")->required();
  auto* o_clusters = gen->add_option("--clusters", synth.n_clusters, "Number of sites");
  auto* o_fpc = gen->add_option("--frames-per-cluster", synth.frames_per_cluster, "Frames per site");
  auto* o_size = gen->add_option("--size", synth.image_size, "Frame size in pixels");
  auto* o_visit = gen->add_option("--visit", synth.visit, "View sampling index (same sites, new views)");
  auto* o_modal = gen->add_option("--modality-fraction", synth.modality_fraction, "Share of NBI frames");
  auto* o_angles = gen->add_option("--angles", angles, "Comma-separated view angles in degrees");

  // train-*
  std::string data_dir, model_out;
  NetOptions ae_opts, vae_opts, siam_opts;
  auto* tae = app.add_subcommand("train-ae", "Train the convolutional autoencoder");
  tae->add_option("--data", data_dir, "Training corpus directory")->required();
  tae->add_option("--out", model_out, "Weights file")->required();
  ae_opts.add(tae, "--latent-dim");

  auto* tvae = app.add_subcommand("train-vae", "Train the variational autoencoder");
  double beta = 1.0;
  tvae->add_option("--data", data_dir, "Training corpus directory")->required();
  tvae->add_option("--out", model_out, "Weights file")->required();
  vae_opts.add(tvae, "--latent-dim");
  auto* o_beta = tvae->add_option("--beta", beta, "KL weight");

  auto* tsiam = app.add_subcommand("train-siamese", "Train the Siamese re-ranker on sampled pairs");
  std::size_t n_pairs = 4000;
  double similar_fraction = 0.5, margin = 1.0;
  tsiam->add_option("--data", data_dir, "Labeled training corpus directory")->required();
  tsiam->add_option("--out", model_out, "Weights file")->required();
  siam_opts.add(tsiam, "--embedding-dim");
  auto* o_pairs = tsiam->add_option("--pairs", n_pairs, "Pairs to sample");
  auto* o_simfrac = tsiam->add_option("--similar-fraction", similar_fraction, "Share of same-site pairs");
  auto* o_margin = tsiam->add_option("--margin", margin, "Contrastive margin");

  // build-index
  auto* bidx = app.add_subcommand("build-index", "Encode a corpus into a latent index");
  std::string model_path, index_out, dtype_name = "f32";
  bidx->add_option("--model", model_path, "AE or VAE weights")->required();
  bidx->add_option("--data", data_dir, "Target corpus directory")->required();
  bidx->add_option("--out", index_out, "Index file (stats go to <out>.stats.csv)")->required();
  auto* o_dtype = bidx->add_option("--dtype", dtype_name, "f32 or f16");

  // query
  auto* qry = app.add_subcommand("query", "Retrieve the best matches for one frame");
  std::string index_path, frame_path, siamese_path, frames_dir;
  std::size_t cand_k = 100, final_n = 10;
  double blend = 0.0;
  qry->add_option("--index", index_path, "Index file")->required();
  qry->add_option("--model", model_path, "Encoder weights that built the index")->required();
  qry->add_option("--frame", frame_path, "Query image (PNG or PPM)")->required();
  qry->add_option("--siamese", siamese_path, "Siamese weights; enables re-ranking");
  qry->add_option("--frames", frames_dir, "Directory holding the target frames");
  auto* o_k = qry->add_option("--candidates", cand_k, "Candidates from the L2 search");
  auto* o_n = qry->add_option("--top", final_n, "Results to return");
  auto* o_blend = qry->add_option("--blend", blend, "Weight of the L2 score in the re-rank key");

  // eval
  auto* ev = app.add_subcommand("eval", "TP/FP/precision of the four retrieval methods");
  std::string queries_dir, targets_dir, ae_path, vae_path, ae_index, vae_index, report_out, breakdown_out,
      gallery_out;
  std::size_t n_queries = 49, gallery_n = 5;
  ev->add_option("--queries", queries_dir, "Labeled query corpus directory")->required();
  ev->add_option("--targets", targets_dir, "Labeled target corpus directory")->required();
  ev->add_option("--ae", ae_path, "AE weights")->required();
  ev->add_option("--vae", vae_path, "VAE weights")->required();
  ev->add_option("--siamese", siamese_path, "Siamese weights")->required();
  ev->add_option("--ae-index", ae_index, "Prebuilt AE index of the targets");
  ev->add_option("--vae-index", vae_index, "Prebuilt VAE index of the targets");
  ev->add_option("--out", report_out, "CSV report (method,tp,fp,precision)")->required();
  ev->add_option("--breakdown", breakdown_out, "Per-query CSV");
  ev->add_option("--gallery", gallery_out, "HTML gallery");
  auto* o_nq = ev->add_option("--n-queries", n_queries, "Queries to sample");
  auto* o_en = ev->add_option("--top", final_n, "Results per query");
  auto* o_ek = ev->add_option("--candidates", cand_k, "Candidates from the L2 search");
  auto* o_eb = ev->add_option("--blend", blend, "Weight of the L2 score in the re-rank key");
  auto* o_gn = ev->add_option("--gallery-queries", gallery_n, "Queries shown in the gallery");

  // report
  auto* rep = app.add_subcommand("report", "Compression and timing table for built indexes");
  std::vector<std::string> index_files;
  std::string csv_out;
  rep->add_option("indexes", index_files, "Index files written by build-index")->required();
  rep->add_option("--csv", csv_out, "Also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (!g.config_path.empty()) g.config = eval::Config::load(g.config_path);
    const auto& cfg = g.config;
    const std::uint64_t seed = pick(o_seed, g.seed, cfg, "seed", std::uint64_t{1});

    if (gen->parsed()) {
      dataio::SynthConfig s;
      s.seed = seed;
      s.n_clusters = pick(o_clusters, synth.n_clusters, cfg, "synth.clusters", s.n_clusters);
      s.frames_per_cluster = pick(o_fpc, synth.frames_per_cluster, cfg, "synth.frames_per_cluster", s.frames_per_cluster);
      s.image_size = pick(o_size, synth.image_size, cfg, "synth.image_size", s.image_size);
      s.visit = pick(o_visit, synth.visit, cfg, "synth.visit", s.visit);
      s.modality_fraction = pick(o_modal, synth.modality_fraction, cfg, "synth.modality_fraction", s.modality_fraction);
      const auto a = pick<std::string>(o_angles, angles, cfg, "synth.angles", "");
      if (!a.empty()) {
        eval::Config tmp;
        tmp.set("a", a);
        s.rotation_angles = tmp.get_doubles("a", {});
      }
      const auto corpus = dataio::generate_synthetic(s);
      fs::create_directories(gen_out);
      dataio::save_corpus(corpus, gen_out);
      std::fprintf(stderr, "wrote %zu frames to %s\n", corpus.size(), gen_out.c_str());
    } else if (tae->parsed() || tvae->parsed()) {
      const bool is_ae = tae->parsed();
      const std::string ns = is_ae ? "ae" : "vae";
      auto arch = is_ae ? models::default_ae_config() : models::default_vae_config();
      auto train = is_ae ? models::default_ae_training() : models::default_vae_training();
      (is_ae ? ae_opts : vae_opts).apply(cfg, ns, arch, train);
      if (!is_ae) train.beta = pick(o_beta, beta, cfg, "vae.beta", train.beta);
      train.seed = seed;
      const auto epochs = train.epochs;
      train.on_epoch = [&](std::uint32_t e, double l) { print_progress(ns.c_str(), e, l, epochs); };
      const auto corpus = load_labeled(data_dir);
      models::Model model(models::make_spec(is_ae ? models::ModelKind::ae : models::ModelKind::vae, arch), seed);
      const auto rep_ = is_ae ? models::ae_train(model, corpus, train) : models::vae_train(model, corpus, train);
      model.save(model_out);
      std::fprintf(stderr, "%s: %u epochs in %.1fs, checksum %s\n", ns.c_str(), rep_.epochs, rep_.seconds,
                   to_hex(model.checksum()).c_str());
    } else if (tsiam->parsed()) {
      auto arch = models::default_siamese_config();
      auto train = models::default_siamese_training();
      siam_opts.apply(cfg, "siamese", arch, train);
      arch.margin = static_cast<float>(pick(o_margin, margin, cfg, "siamese.margin", double{arch.margin}));
      train.seed = seed;
      const auto epochs = train.epochs;
      train.on_epoch = [&](std::uint32_t e, double l) { print_progress("siamese", e, l, epochs); };
      const auto corpus = load_labeled(data_dir);
      const auto np = pick(o_pairs, n_pairs, cfg, "siamese.pairs", std::size_t{4000});
      const auto sf = pick(o_simfrac, similar_fraction, cfg, "siamese.similar_fraction", 0.5);
      const auto pairs = dataio::sample_pairs(corpus, np, sf, seed);
      models::Model model(models::make_spec(models::ModelKind::siamese, arch), seed);
      const auto r = models::siamese_train(model, corpus, pairs, train);
      model.save(model_out);
      std::fprintf(stderr, "siamese: %u epochs in %.1fs, checksum %s\n", r.epochs, r.seconds,
                   to_hex(model.checksum()).c_str());
    } else if (bidx->parsed()) {
      const auto model = models::Model::load(model_path);
      const auto dtype = index::parse_dtype(pick<std::string>(o_dtype, dtype_name, cfg, "index.dtype", "f32"));
      const auto corpus = dataio::load_corpus(data_dir);
      const auto built = index::build_index(model, corpus, dtype);
      index::save_index(built.index, index_out);
      const std::vector<index::CompressionStats> stats{built.stats};
      write_text(stats_path(index_out), eval::compression_csv(stats));
      std::cout << eval::compression_table(stats);
    } else if (qry->parsed()) {
      const auto encoder = models::Model::load(model_path);
      const auto idx = index::load_index(index_path, encoder.checksum());
      const auto frame = dataio::decode_image(frame_path);
      std::optional<models::Model> siamese;
      if (!siamese_path.empty()) siamese = models::Model::load(siamese_path);
      retrieval::QueryRequest req;
      req.query_frame = &frame;
      req.index = &idx;
      req.candidate_k = pick(o_k, cand_k, cfg, "retrieval.candidate_k", std::size_t{100});
      req.final_n = pick(o_n, final_n, cfg, "retrieval.final_n", std::size_t{10});
      req.blend = pick(o_blend, blend, cfg, "retrieval.blend", 0.0);
      req.use_siamese = siamese.has_value();
      std::optional<retrieval::DirectorySource> source;
      if (!frames_dir.empty()) source.emplace(frames_dir);
      retrieval::CorpusAccess access;
      access.frames = source ? &*source : nullptr;
      access.decoder = &encoder;
      access.latents = &idx;
      const auto result = retrieval::retrieve(req, {&encoder, siamese ? &*siamese : nullptr}, access);
      for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      if (result.used_fallback) std::fprintf(stderr, "warning: some candidates were reconstructed by the decoder\n");
      std::printf("rank,frame_id,l2_score,siamese_distance,reconstructed\n");
      for (const auto& r : result.ranked) {
        std::printf("%zu,%s,%.6f,%s,%d\n", r.final_rank, r.frame_id.c_str(), r.l2_score,
                    r.siamese_distance ? std::to_string(*r.siamese_distance).c_str() : "", r.reconstructed ? 1 : 0);
      }
      std::fprintf(stderr, "encode %.4fs search %.4fs rerank %.4fs total %.4fs\n", result.timings.encode_s,
                   result.timings.search_s, result.timings.rerank_s, result.timings.total_s);
    } else if (ev->parsed()) {
      const auto ae = models::Model::load(ae_path);
      const auto vae = models::Model::load(vae_path);
      const auto siamese = models::Model::load(siamese_path);
      std::optional<index::LatentIndex> aei, vaei;
      if (!ae_index.empty()) aei = index::load_index(ae_index, ae.checksum());
      if (!vae_index.empty()) vaei = index::load_index(vae_index, vae.checksum());
      const auto queries = load_labeled(queries_dir);
      const auto targets = load_labeled(targets_dir);
      eval::EvalConfig ec;
      ec.seed = seed;
      ec.threads = g.threads;
      ec.n_queries = pick(o_nq, n_queries, cfg, "eval.n_queries", ec.n_queries);
      ec.final_n = pick(o_en, final_n, cfg, "eval.final_n", ec.final_n);
      ec.candidate_k = pick(o_ek, cand_k, cfg, "eval.candidate_k", ec.candidate_k);
      ec.blend = pick(o_eb, blend, cfg, "eval.blend", ec.blend);
      const auto report = eval::evaluate(queries, targets,
                                         {&ae, &vae, &siamese, aei ? &*aei : nullptr, vaei ? &*vaei : nullptr}, ec);
      const auto csv = eval::report_csv(report);
      write_text(report_out, csv);
      std::cout << csv;
      if (!breakdown_out.empty()) write_text(breakdown_out, eval::breakdown_csv(report));
      if (!gallery_out.empty()) {
        const retrieval::CorpusSource src(targets);
        const auto n = pick(o_gn, gallery_n, cfg, "eval.gallery_queries", std::size_t{5});
        eval::render_gallery(eval::gallery_from_report(report, queries, n), src, gallery_out);
      }
    } else if (rep->parsed()) {
      std::vector<index::CompressionStats> all;
      for (const auto& f : index_files) {
        auto stats = eval::parse_compression_csv(read_text(stats_path(f)));
        const auto on_disk = fs::file_size(f);
        for (const auto& s : stats) {
          if (s.index_bytes != on_disk) {
            throw DataError("stats for '" + f + "' record " + std::to_string(s.index_bytes) + " bytes, file has " +
                            std::to_string(on_disk));
          }
          all.push_back(s);
        }
      }
      std::cout << eval::compression_table(all);
      if (!csv_out.empty()) write_text(csv_out, eval::compression_csv(all));
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumeric;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  }
}
