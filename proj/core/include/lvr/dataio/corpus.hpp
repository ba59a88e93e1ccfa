#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lvr/dataio/image.hpp"

namespace lvr::dataio {

enum class Modality : std::uint8_t { wl = 0, nbi = 1 };

std::string to_string(Modality m);
Modality parse_modality(const std::string& s);

struct FrameLabel {
  std::int64_t cluster_id = 0;
  Modality modality = Modality::wl;
  double rotation_deg = 0.0;

  bool operator==(const FrameLabel&) const = default;
};

struct Frame {
  std::string id;
  Image pixels;
};

/// Ordered set of frames with optional ground-truth labels.
class FrameCorpus {
 public:
  FrameCorpus() = default;

  /// Appends a frame; throws DataError on a duplicate id or out-of-range pixels.
  void add(std::string id, Image pixels, std::optional<FrameLabel> label = std::nullopt);

  std::size_t size() const noexcept { return frames_.size(); }
  bool empty() const noexcept { return frames_.empty(); }
  const std::vector<Frame>& frames() const noexcept { return frames_; }
  const Frame& operator[](std::size_t i) const { return frames_.at(i); }

  /// Index of a frame id, if present.
  std::optional<std::size_t> find(const std::string& id) const;
  const Image* pixels(const std::string& id) const;

  /// True when every frame carries a label.
  bool labeled() const noexcept { return !frames_.empty() && labels_.size() == frames_.size(); }
  const FrameLabel& label(const std::string& id) const;
  const std::map<std::string, FrameLabel>& labels() const noexcept { return labels_; }
  void set_label(const std::string& id, FrameLabel label);

  /// Sorts frames by id (byte-wise lexicographic).
  void sort_by_id();

 private:
  std::vector<Frame> frames_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, FrameLabel> labels_;
};

/// Loads every .png / .ppm in a directory (frame id = file stem), sorted by
/// file name. With a manifest CSV (frame_id,cluster_id,modality,rotation_deg)
/// labels are attached; a manifest row naming a missing frame is an error.
FrameCorpus load_corpus(const std::filesystem::path& dir,
                        const std::optional<std::filesystem::path>& manifest = std::nullopt);

/// Writes frames as <id>.png plus manifest.csv (when labeled) into dir.
void save_corpus(const FrameCorpus& corpus, const std::filesystem::path& dir);

/// Manifest I/O on its own.
std::map<std::string, FrameLabel> read_manifest(const std::filesystem::path& path);
void write_manifest(const FrameCorpus& corpus, const std::filesystem::path& path);

}  // namespace lvr::dataio
