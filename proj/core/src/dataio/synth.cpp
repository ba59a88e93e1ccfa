#include "lvr/dataio/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>

#include "lvr/error.hpp"
#include "lvr/rng.hpp"

namespace lvr::dataio {

Image modality_transform(const Image& frame) {
  Image out(frame.height, frame.width);
  const auto& m = kNbiColorMatrix;
  for (std::size_t i = 0; i < frame.pixels.size(); i += 3) {
    const float r = frame.pixels[i], g = frame.pixels[i + 1], b = frame.pixels[i + 2];
    for (std::size_t c = 0; c < 3; ++c) {
      const float v = m[c * 3] * r + m[c * 3 + 1] * g + m[c * 3 + 2] * b;
      out.pixels[i + c] = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return out;
}

Image rotate_frame(const Image& frame, double theta_deg) {
  if (theta_deg == 0.0) return frame;
  const double t = theta_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(t), sn = std::sin(t);
  const double cx = (static_cast<double>(frame.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(frame.height) - 1.0) / 2.0;
  const auto w = static_cast<std::ptrdiff_t>(frame.width);
  const auto h = static_cast<std::ptrdiff_t>(frame.height);

  Image out(frame.height, frame.width);
  for (std::size_t y = 0; y < frame.height; ++y) {
    for (std::size_t x = 0; x < frame.width; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double sx = cx + cs * dx + sn * dy;
      const double sy = cy - sn * dx + cs * dy;
      const auto x0 = static_cast<std::ptrdiff_t>(std::floor(sx));
      const auto y0 = static_cast<std::ptrdiff_t>(std::floor(sy));
      const double fx = sx - static_cast<double>(x0);
      const double fy = sy - static_cast<double>(y0);
      if (x0 < -1 || y0 < -1 || x0 >= w || y0 >= h) continue;
      for (std::size_t c = 0; c < 3; ++c) {
        const auto sample = [&](std::ptrdiff_t yy, std::ptrdiff_t xx) -> double {
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) return 0.0;
          return frame.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), c);
        };
        const double v = (1 - fy) * ((1 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1)) +
                         fy * ((1 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1));
        out.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

void SynthConfig::validate() const {
  if (n_clusters == 0) throw ConfigError("synthetic corpus needs at least one cluster");
  if (frames_per_cluster == 0) throw ConfigError("synthetic corpus needs frames_per_cluster >= 1");
  if (image_size < 8) throw ConfigError("synthetic image_size must be >= 8");
  if (!(modality_fraction >= 0.0 && modality_fraction <= 1.0)) {
    throw ConfigError("modality_fraction must lie in [0,1]");
  }
  for (double a : rotation_angles) {
    if (!(a >= 0.0 && a < 360.0)) throw ConfigError("rotation angles must lie in [0,360)");
  }
}

namespace {

struct Blob {
  double x, y, sigma, amp;
};

struct Curve {
  std::array<double, 8> ctrl;  // cubic Bezier control points (x0,y0..x3,y3)
  double width;
  double strength;
};

double gauss2(double dx, double dy, double sigma) {
  return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
}

}  // namespace

Image render_base(std::uint64_t seed, std::int64_t cluster_id, std::uint32_t size) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(cluster_id)));

  // Mucosa tint and per-channel low-frequency fields.
  const std::array<double, 3> tint = {rng.uniform(0.85, 1.0), rng.uniform(0.15, 0.5),
                                      rng.uniform(0.1, 0.42)};
  std::array<std::vector<Blob>, 3> fields;
  for (auto& f : fields) {
    for (int k = 0; k < 4; ++k) {
      f.push_back({rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9), rng.uniform(0.2, 0.55),
                   rng.uniform(-0.3, 0.3)});
    }
  }
  struct Grating {
    double kx, ky, phase, amp;
  };
  std::vector<Grating> gratings;
  for (int k = 0; k < 2; ++k) {
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double freq = rng.uniform(1.0, 3.0) * std::numbers::pi;
    gratings.push_back({freq * std::cos(angle), freq * std::sin(angle),
                        rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(0.05, 0.15)});
  }

  // Dark lumen, off-centre so the view has an orientation.
  const double lr = rng.uniform(0.15, 0.6);
  const double la = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const Blob lumen{lr * std::cos(la), lr * std::sin(la), rng.uniform(0.12, 0.25), rng.uniform(0.75, 0.95)};

  std::vector<Curve> vessels(3 + rng.below(4));
  for (auto& v : vessels) {
    for (auto& p : v.ctrl) p = rng.uniform(-0.95, 0.95);
    v.width = rng.uniform(0.015, 0.04);
    v.strength = rng.uniform(0.4, 0.75);
  }
  std::vector<Blob> highlights(2 + rng.below(3));
  for (auto& s : highlights) {
    s = {rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7), rng.uniform(0.02, 0.05), rng.uniform(0.6, 0.9)};
  }

  // Sampled polylines of the vessel curves.
  constexpr int kSegments = 48;
  std::vector<std::vector<std::array<double, 2>>> polylines;
  for (const auto& v : vessels) {
    std::vector<std::array<double, 2>> pts;
    for (int i = 0; i <= kSegments; ++i) {
      const double t = static_cast<double>(i) / kSegments, s = 1.0 - t;
      const double b0 = s * s * s, b1 = 3 * s * s * t, b2 = 3 * s * t * t, b3 = t * t * t;
      pts.push_back({b0 * v.ctrl[0] + b1 * v.ctrl[2] + b2 * v.ctrl[4] + b3 * v.ctrl[6],
                     b0 * v.ctrl[1] + b1 * v.ctrl[3] + b2 * v.ctrl[5] + b3 * v.ctrl[7]});
    }
    polylines.push_back(std::move(pts));
  }

  constexpr double kFov = 0.88;
  constexpr double kGamma = 1.8;  // saturated, dark-biased palette
  Image img(size, size);
  for (std::uint32_t py = 0; py < size; ++py) {
    for (std::uint32_t px = 0; px < size; ++px) {
      const double u = (2.0 * px + 1.0) / size - 1.0;
      const double v = (2.0 * py + 1.0) / size - 1.0;
      const double r = std::sqrt(u * u + v * v);
      if (r >= kFov) continue;
      const double vignette = std::pow(1.0 - (r / kFov) * (r / kFov), 0.25);

      std::array<double, 3> col{};
      for (std::size_t c = 0; c < 3; ++c) {
        double val = tint[c];
        for (const auto& b : fields[c]) val += b.amp * gauss2(u - b.x, v - b.y, b.sigma);
        for (const auto& g : gratings) val += g.amp * std::sin(g.kx * u + g.ky * v + g.phase) * (c == 0 ? 0.5 : 1.0);
        col[c] = val;
      }
      double vessel = 0.0;
      for (std::size_t k = 0; k < vessels.size(); ++k) {
        double best = 1e9;
        const auto& pts = polylines[k];
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
          const double ax = pts[i][0], ay = pts[i][1];
          const double bx = pts[i + 1][0] - ax, by = pts[i + 1][1] - ay;
          const double len2 = bx * bx + by * by;
          const double t = len2 > 0 ? std::clamp(((u - ax) * bx + (v - ay) * by) / len2, 0.0, 1.0) : 0.0;
          const double dx = u - ax - t * bx, dy = v - ay - t * by;
          best = std::min(best, dx * dx + dy * dy);
        }
        const double w2 = vessels[k].width * vessels[k].width;
        vessel = std::max(vessel, vessels[k].strength * std::exp(-best / w2));
      }
      col[0] *= 1.0 - 0.45 * vessel;
      col[1] *= 1.0 - vessel;
      col[2] *= 1.0 - 0.8 * vessel;

      const double dark = 1.0 - lumen.amp * gauss2(u - lumen.x, v - lumen.y, lumen.sigma);
      double spec = 0.0;
      for (const auto& s : highlights) spec = std::max(spec, s.amp * gauss2(u - s.x, v - s.y, s.sigma));
      for (std::size_t c = 0; c < 3; ++c) {
        double val = std::pow(std::clamp(col[c], 0.0, 1.0) * vignette * dark, kGamma);
        val = val + (1.0 - val) * spec;
        img.at(py, px, c) = static_cast<float>(std::clamp(val, 0.0, 1.0));
      }
    }
  }
  return img;
}

FrameCorpus generate_synthetic(const SynthConfig& config) {
  config.validate();
  FrameCorpus corpus;
  const std::uint64_t visit_seed = mix_seed(config.seed, 0x5157ULL + config.visit);
  for (std::uint32_t c = 0; c < config.n_clusters; ++c) {
    const Image base = render_base(config.seed, c, config.image_size);
    for (std::uint32_t i = 0; i < config.frames_per_cluster; ++i) {
      Rng rng(mix_seed(visit_seed, std::uint64_t{c} * config.frames_per_cluster + i));
      FrameLabel label;
      label.cluster_id = c;
      label.rotation_deg = config.rotation_angles.empty()
                               ? rng.uniform(0.0, 360.0)
                               : config.rotation_angles[rng.below(config.rotation_angles.size())];
      label.modality = rng.uniform() < config.modality_fraction ? Modality::nbi : Modality::wl;

      Image frame = rotate_frame(base, label.rotation_deg);
      if (label.modality == Modality::nbi) frame = modality_transform(frame);
      char id[64];
      std::snprintf(id, sizeof(id), "v%u_c%04u_f%03u", config.visit, c, i);
      corpus.add(id, quantize8(frame), label);
    }
  }
  corpus.sort_by_id();
  return corpus;
}

std::vector<PairSample> sample_pairs(const FrameCorpus& corpus, std::size_t n_pairs,
                                     double similar_fraction, std::uint64_t seed) {
  if (!corpus.labeled()) throw DataError("sample_pairs needs a fully labeled corpus");
  if (!(similar_fraction >= 0.0 && similar_fraction <= 1.0)) {
    throw ConfigError("similar_fraction must lie in [0,1]");
  }
  std::map<std::int64_t, std::vector<std::string>> clusters;
  for (const auto& f : corpus.frames()) clusters[corpus.label(f.id).cluster_id].push_back(f.id);
  if (clusters.size() < 2) throw DataError("sample_pairs needs at least two clusters");

  std::vector<const std::vector<std::string>*> multi;
  std::vector<const std::vector<std::string>*> all;
  for (const auto& [id, members] : clusters) {
    all.push_back(&members);
    if (members.size() >= 2) multi.push_back(&members);
  }

  const auto n_similar = static_cast<std::size_t>(std::floor(n_pairs * similar_fraction + 0.5));
  if (n_similar > 0 && multi.empty()) {
    throw DataError("sample_pairs: no cluster has two frames to form a similar pair");
  }

  Rng rng(seed);
  std::vector<PairSample> pairs;
  pairs.reserve(n_pairs);
  for (std::size_t k = 0; k < n_similar; ++k) {
    const auto& members = *multi[rng.below(multi.size())];
    const std::size_t i = rng.below(members.size());
    std::size_t j = rng.below(members.size() - 1);
    if (j >= i) ++j;
    pairs.push_back({members[i], members[j], 0});
  }
  for (std::size_t k = n_similar; k < n_pairs; ++k) {
    const std::size_t ca = rng.below(all.size());
    std::size_t cb = rng.below(all.size() - 1);
    if (cb >= ca) ++cb;
    const auto& ma = *all[ca];
    const auto& mb = *all[cb];
    pairs.push_back({ma[rng.below(ma.size())], mb[rng.below(mb.size())], 1});
  }
  rng.shuffle(pairs);
  return pairs;
}

}  // namespace lvr::dataio
