#include "lvr/dataio/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "lvr/error.hpp"

namespace lvr::dataio {

namespace fs = std::filesystem;

std::string to_string(Modality m) { return m == Modality::wl ? "WL" : "NBI"; }

Modality parse_modality(const std::string& s) {
  if (s == "WL" || s == "wl") return Modality::wl;
  if (s == "NBI" || s == "nbi") return Modality::nbi;
  throw DataError("unknown modality '" + s + "'");
}

void FrameCorpus::add(std::string id, Image pixels, std::optional<FrameLabel> label) {
  if (id.empty()) throw DataError("frame id must be non-empty");
  if (index_.contains(id)) throw DataError("duplicate frame id '" + id + "'");
  if (pixels.empty()) throw DataError("frame '" + id + "' has no pixels");
  for (float v : pixels.pixels) {
    if (!(v >= 0.0f && v <= 1.0f)) throw DataError("frame '" + id + "' has pixels outside [0,1]");
  }
  index_.emplace(id, frames_.size());
  if (label) labels_[id] = *label;
  frames_.push_back({std::move(id), std::move(pixels)});
}

std::optional<std::size_t> FrameCorpus::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Image* FrameCorpus::pixels(const std::string& id) const {
  auto i = find(id);
  return i ? &frames_[*i].pixels : nullptr;
}

const FrameLabel& FrameCorpus::label(const std::string& id) const {
  auto it = labels_.find(id);
  if (it == labels_.end()) throw DataError("frame '" + id + "' has no label");
  return it->second;
}

void FrameCorpus::set_label(const std::string& id, FrameLabel label) {
  if (!index_.contains(id)) throw DataError("label for unknown frame '" + id + "'");
  labels_[id] = label;
}

void FrameCorpus::sort_by_id() {
  std::sort(frames_.begin(), frames_.end(),
            [](const Frame& a, const Frame& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < frames_.size(); ++i) index_[frames_[i].id] = i;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

template <typename N>
N parse_number(const std::string& s, const fs::path& path, std::size_t line) {
  N v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::map<std::string, FrameLabel> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("manifest '" + path.string() + "' is empty");
  if (trim(line) != "frame_id,cluster_id,modality,rotation_deg") {
    throw DataError("manifest '" + path.string() + "' has an unexpected header: " + line);
  }
  std::map<std::string, FrameLabel> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 4) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 4 columns");
    }
    FrameLabel label;
    label.cluster_id = parse_number<std::int64_t>(trim(cells[1]), path, lineno);
    label.modality = parse_modality(trim(cells[2]));
    label.rotation_deg = parse_number<double>(trim(cells[3]), path, lineno);
    if (!(label.rotation_deg >= 0.0 && label.rotation_deg < 360.0)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": rotation outside [0,360)");
    }
    auto id = trim(cells[0]);
    if (!out.emplace(id, label).second) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": duplicate frame '" + id + "'");
    }
  }
  return out;
}

void write_manifest(const FrameCorpus& corpus, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
  out << "frame_id,cluster_id,modality,rotation_deg\n";
  for (const auto& f : corpus.frames()) {
    const auto& l = corpus.label(f.id);
    out << f.id << ',' << l.cluster_id << ',' << to_string(l.modality) << ','
        << format_double(l.rotation_deg) << '\n';
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

FrameCorpus load_corpus(const fs::path& dir, const std::optional<fs::path>& manifest) {
  if (!fs::is_directory(dir)) throw DataError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  FrameCorpus corpus;
  for (const auto& f : files) corpus.add(f.stem().string(), decode_image(f));

  if (manifest) {
    for (const auto& [id, label] : read_manifest(*manifest)) {
      if (!corpus.find(id)) {
        throw DataError("manifest '" + manifest->string() + "' references missing frame '" + id + "'");
      }
      corpus.set_label(id, label);
    }
  }
  return corpus;
}

void save_corpus(const FrameCorpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& f : corpus.frames()) write_png(f.pixels, dir / (f.id + ".png"));
  if (corpus.labeled()) write_manifest(corpus, dir / "manifest.csv");
}

}  // namespace lvr::dataio
