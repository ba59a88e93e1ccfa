#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>

#include "lvr/dataio/synth.hpp"
#include "lvr/error.hpp"
#include "lvr/eval/config.hpp"
#include "lvr/eval/eval.hpp"
#include "lvr/index/index.hpp"

using namespace lvr;
using namespace lvr::eval;
namespace fs = std::filesystem;

namespace {

models::ArchConfig tiny_arch(std::uint32_t latent) {
  models::ArchConfig a;
  a.input_size = 32;
  a.channels = {4, 8, 8};
  a.latent_dim = latent;
  return a;
}

dataio::FrameCorpus synth(std::uint32_t clusters, std::uint32_t per_cluster, std::uint32_t visit) {
  dataio::SynthConfig c;
  c.n_clusters = clusters;
  c.frames_per_cluster = per_cluster;
  c.image_size = 32;
  c.seed = 41;
  c.visit = visit;
  return dataio::generate_synthetic(c);
}

// Frames of `src` whose cluster passes the filter, labels kept.
template <typename Keep>
dataio::FrameCorpus filter(const dataio::FrameCorpus& src, Keep keep) {
  dataio::FrameCorpus out;
  for (const auto& f : src.frames()) {
    const auto& l = src.label(f.id);
    if (keep(l.cluster_id)) out.add(f.id, f.pixels, l);
  }
  return out;
}

struct Nets {
  models::Model ae{models::make_spec(models::ModelKind::ae, tiny_arch(32)), 51};
  models::Model vae{models::make_spec(models::ModelKind::vae, tiny_arch(10)), 52};
  models::Model siamese{models::make_spec(models::ModelKind::siamese, tiny_arch(8)), 53};
  EvalModels view() const { return {&ae, &vae, &siamese, nullptr, nullptr}; }
};

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Precision, Examples) {
  EXPECT_NEAR(precision_from_counts(417, 73), 0.8510, 5e-5);
  EXPECT_NEAR(precision_from_counts(437, 53), 0.8918, 5e-5);
  EXPECT_NEAR(precision_from_counts(473, 17), 0.9653, 5e-5);
  EXPECT_EQ(precision_from_counts(0, 5), 0.0);
  EXPECT_EQ(precision_from_counts(5, 0), 1.0);
  EXPECT_THROW(precision_from_counts(0, 0), ConfigError);
}

TEST(Method, Names) {
  std::vector<std::string> names;
  for (auto m : kMethods) names.push_back(to_string(m));
  EXPECT_EQ(names, (std::vector<std::string>{"AE", "VAE", "AE-Siamese", "VAE-Siamese"}));
}

TEST(Evaluate, AllTargetsRelevantGivesPrecisionOne) {
  Nets n;
  const auto queries = synth(1, 3, 2);
  const auto targets = synth(1, 12, 1);
  EvalConfig cfg;
  cfg.n_queries = 3;
  const auto report = evaluate(queries, targets, n.view(), cfg);
  for (const auto& m : report.methods) {
    EXPECT_EQ(m.precision, 1.0) << to_string(m.method);
    EXPECT_EQ(m.tp, 30u);
  }
}

TEST(Evaluate, NoRelevantTargetsGivesPrecisionZero) {
  Nets n;
  const auto queries = filter(synth(3, 2, 2), [](std::int64_t c) { return c == 0; });
  const auto targets = filter(synth(3, 6, 1), [](std::int64_t c) { return c != 0; });
  EvalConfig cfg;
  cfg.n_queries = 2;
  const auto report = evaluate(queries, targets, n.view(), cfg);
  for (const auto& m : report.methods) {
    EXPECT_EQ(m.precision, 0.0) << to_string(m.method);
    EXPECT_EQ(m.fp, 20u);
  }
}

TEST(Evaluate, DefaultsCount490PerMethodAndMatchBreakdown) {
  Nets n;
  const auto queries = synth(50, 1, 2);
  const auto targets = synth(50, 2, 1);
  const auto report = evaluate(queries, targets, n.view(), EvalConfig{});
  ASSERT_EQ(report.methods.size(), 4u);
  for (const auto& m : report.methods) {
    EXPECT_EQ(m.tp + m.fp, 490u);
    EXPECT_EQ(m.precision, static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp));
    std::uint64_t tp = 0, fp = 0;
    for (const auto& q : report.per_query) {
      if (q.method != m.method) continue;
      tp += q.tp;
      fp += q.fp;
      std::uint64_t rel = 0;
      for (bool r : q.relevant) rel += r;
      EXPECT_EQ(rel, q.tp);
      for (std::size_t i = 0; i < q.ranked.size(); ++i) {
        EXPECT_EQ(q.relevant[i], targets.label(q.ranked[i].frame_id).cluster_id == q.cluster_id);
      }
    }
    EXPECT_EQ(tp, m.tp);
    EXPECT_EQ(fp, m.fp);
  }
}

TEST(Evaluate, RerankKeepsCandidateMembership) {
  Nets n;
  const auto queries = synth(6, 1, 2);
  const auto targets = synth(6, 3, 1);
  EvalConfig cfg;
  cfg.n_queries = 6;
  cfg.final_n = 15;
  cfg.candidate_k = 15;
  const auto report = evaluate(queries, targets, n.view(), cfg);
  std::map<std::pair<std::string, Method>, std::set<std::string>> sets;
  for (const auto& q : report.per_query) {
    for (const auto& r : q.ranked) sets[{q.query_id, q.method}].insert(r.frame_id);
  }
  for (const auto& q : report.per_query) {
    const auto key = [&](Method m) { return std::make_pair(q.query_id, m); };
    EXPECT_EQ(sets[key(Method::ae)], sets[key(Method::ae_siamese)]);
    EXPECT_EQ(sets[key(Method::vae)], sets[key(Method::vae_siamese)]);
  }
}

TEST(Evaluate, CsvIsDeterministicAcrossRunsAndThreads) {
  Nets n;
  const auto queries = synth(8, 2, 2);
  const auto targets = synth(8, 3, 1);
  EvalConfig cfg;
  cfg.n_queries = 7;
  const auto a = evaluate(queries, targets, n.view(), cfg);
  cfg.threads = 3;
  const auto b = evaluate(queries, targets, n.view(), cfg);
  EXPECT_EQ(report_csv(a), report_csv(b));
  EXPECT_EQ(breakdown_csv(a), breakdown_csv(b));
  EXPECT_EQ(report_csv(a).rfind("method,tp,fp,precision\nAE,", 0), 0u) << report_csv(a);
}

TEST(Evaluate, QueryOrderFollowsIds) {
  Nets n;
  const auto queries = synth(5, 2, 2);
  const auto targets = synth(5, 2, 1);
  EvalConfig cfg;
  cfg.n_queries = 4;
  const auto report = evaluate(queries, targets, n.view(), cfg);
  for (std::size_t i = 1; i < report.per_query.size(); ++i) {
    EXPECT_LE(report.per_query[i - 1].query_id, report.per_query[i].query_id);
  }
}

TEST(Evaluate, BadInputsAreRejected) {
  Nets n;
  const auto targets = synth(2, 2, 1);
  dataio::FrameCorpus unlabeled;
  unlabeled.add("q", targets[0].pixels);
  EvalConfig cfg;
  cfg.n_queries = 1;
  EXPECT_THROW(evaluate(unlabeled, targets, n.view(), cfg), DataError);
  cfg.n_queries = 10;
  EXPECT_THROW(evaluate(synth(2, 2, 2), targets, n.view(), cfg), ConfigError);
}

TEST(Compression, NaRatioAndCsvRoundTrip) {
  index::CompressionStats empty{"empty", 0, 0, 52, std::nullopt, 0.0};
  index::CompressionStats full{"AE", 10, 30720, 1852, 30720.0 / 1852.0, 0.25};
  const std::vector<index::CompressionStats> rows{empty, full};
  EXPECT_NE(compression_table(rows).find("n/a"), std::string::npos);
  const auto back = parse_compression_csv(compression_csv(rows));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_FALSE(back[0].ratio.has_value());
  EXPECT_EQ(back[1].label, "AE");
  EXPECT_EQ(back[1].index_bytes, 1852u);
  EXPECT_EQ(back[1].raw_bytes, 30720u);
  EXPECT_DOUBLE_EQ(*back[1].ratio, *full.ratio);
}

TEST(Compression, BytesMatchFilesAndVaeIsSmaller) {
  Nets n;
  const auto corpus = synth(4, 5, 1);
  const auto ae = index::build_index(n.ae, corpus);
  const auto vae = index::build_index(n.vae, corpus);
  const auto dir = fs::temp_directory_path() / "lvr_eval_compression";
  fs::create_directories(dir);
  index::save_index(ae.index, dir / "ae.lvix");
  index::save_index(vae.index, dir / "vae.lvix");
  EXPECT_EQ(ae.stats.index_bytes, fs::file_size(dir / "ae.lvix"));
  EXPECT_EQ(vae.stats.index_bytes, fs::file_size(dir / "vae.lvix"));
  EXPECT_LT(vae.stats.index_bytes, ae.stats.index_bytes);
  fs::remove_all(dir);
}

TEST(Gallery, EmptyStateIsValidHtml) {
  dataio::FrameCorpus none;
  retrieval::CorpusSource src(none);
  const auto html = render_gallery_html({}, src);
  EXPECT_NE(html.find("<!DOCTYPE html>"), std::string::npos);
  EXPECT_NE(html.find("</html>"), std::string::npos);
  EXPECT_NE(html.find("No queries to show."), std::string::npos);
}

TEST(Gallery, CellCountsAndSelfContained) {
  Nets n;
  const auto queries = synth(3, 1, 2);
  const auto targets = synth(3, 5, 1);
  EvalConfig cfg;
  cfg.n_queries = 3;
  const auto report = evaluate(queries, targets, n.view(), cfg);
  retrieval::CorpusSource src(targets);
  const auto html = render_gallery_html(gallery_from_report(report, queries, 2), src);
  EXPECT_EQ(count(html, "class=\"query\""), 2u);
  EXPECT_EQ(count(html, "class=\"hit\""), 80u);
  EXPECT_EQ(count(html, "http:"), 0u);
  EXPECT_EQ(count(html, "https:"), 0u);
  EXPECT_EQ(count(html, "src=\"//"), 0u);
  EXPECT_EQ(count(html, "src=\"data:image/png;base64,"), 82u);
}

TEST(Config, ParsesTypedValues) {
  const auto c = Config::parse("# comment\nseed = 7\n\nae.latent_dim=32  # trailing\nretrieval.blend = 0.25\n"
                               "flag = true\nsynth.angles = 0, 90,180\nname = hello world\n");
  EXPECT_EQ(c.get_u64("seed", 0), 7u);
  EXPECT_EQ(c.get_u64("ae.latent_dim", 0), 32u);
  EXPECT_DOUBLE_EQ(c.get_double("retrieval.blend", 0.0), 0.25);
  EXPECT_TRUE(c.get_bool("flag", false));
  EXPECT_EQ(c.get_doubles("synth.angles", {}), (std::vector<double>{0, 90, 180}));
  EXPECT_EQ(c.get_string("name", ""), "hello world");
  EXPECT_EQ(c.get_u64("missing", 5), 5u);
  EXPECT_TRUE(c.unused_keys().empty());
}

TEST(Config, ErrorsNameTheLine) {
  for (const char* text : {"seed = 1\nno equals sign\n", "seed = 1\nseed = 2\n", "seed = 1\n = 3\n"}) {
    try {
      Config::parse(text);
      FAIL() << text;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
  const auto c = Config::parse("seed = abc\nx = 1\n");
  EXPECT_THROW(c.get_u64("seed", 0), ConfigError);
  EXPECT_EQ(c.unused_keys(), (std::vector<std::string>{"x"}));
}
