#include "lvr/dataio/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "lvr/error.hpp"

namespace lvr::dataio {
namespace {

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

std::vector<std::uint8_t> to_bytes(const Image& img) {
  std::vector<std::uint8_t> out(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), out.begin(), to_byte);
  return out;
}

Image from_bytes(std::size_t h, std::size_t w, const std::uint8_t* data) {
  Image img(h, w);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = data[i] / 255.0f;
  return img;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Image decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DataError("cannot decode PNG '" + name + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError("cannot decode PNG '" + name + "': " + msg);
  }
  return from_bytes(image.height, image.width, data.data());
}

std::size_t parse_ppm_int(const std::vector<std::uint8_t>& b, std::size_t& pos, const std::string& name) {
  auto skip = [&] {
    while (pos < b.size()) {
      if (std::isspace(b[pos])) {
        ++pos;
      } else if (b[pos] == '#') {
        while (pos < b.size() && b[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  skip();
  std::size_t v = 0;
  bool any = false;
  while (pos < b.size() && std::isdigit(b[pos])) {
    v = v * 10 + (b[pos++] - '0');
    any = true;
    if (v > (1u << 24)) break;
  }
  if (!any) throw DataError("malformed PPM header in '" + name + "'");
  return v;
}

Image decode_ppm(const std::vector<std::uint8_t>& b, const std::string& name) {
  if (b.size() < 2 || b[0] != 'P' || b[1] != '6') throw DataError("'" + name + "' is not a binary PPM");
  std::size_t pos = 2;
  const std::size_t w = parse_ppm_int(b, pos, name);
  const std::size_t h = parse_ppm_int(b, pos, name);
  const std::size_t maxval = parse_ppm_int(b, pos, name);
  if (maxval != 255) throw DataError("'" + name + "': only 8-bit PPM is supported");
  if (w == 0 || h == 0) throw DataError("'" + name + "': empty PPM");
  ++pos;  // single whitespace after maxval
  if (b.size() < pos + w * h * 3) throw DataError("'" + name + "': truncated PPM data");
  return from_bytes(h, w, b.data() + pos);
}

}  // namespace

Image quantize8(const Image& img) {
  Image out = img;
  for (auto& v : out.pixels) v = to_byte(v) / 255.0f;
  return out;
}

Image decode_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string name = path.string();
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes, name);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, name);
  throw DataError("'" + name + "' is neither PNG nor binary PPM");
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty()) throw DataError("cannot encode an empty image");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  const auto bytes = to_bytes(img);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, bytes.data(), 0, nullptr)) {
    throw DataError(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, bytes.data(), 0, nullptr)) {
    throw DataError(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

void write_png(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  const auto bytes = to_bytes(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

namespace {

struct Tap {
  std::size_t first;
  std::vector<float> weights;
};

// Filter taps mapping `in` samples to `out` samples along one axis.
std::vector<Tap> resample_taps(std::size_t in, std::size_t out) {
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double support = std::max(1.0, scale);
  std::vector<Tap> taps(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double center = (static_cast<double>(o) + 0.5) * scale - 0.5;
    const auto lo = static_cast<std::ptrdiff_t>(std::floor(center - support)) + 1;
    const auto hi = static_cast<std::ptrdiff_t>(std::ceil(center + support)) - 1;
    const auto first = std::max<std::ptrdiff_t>(lo, 0);
    const auto last = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(in) - 1);
    Tap t;
    t.first = static_cast<std::size_t>(first);
    double total = 0.0;
    for (auto i = first; i <= last; ++i) {
      const double wgt = std::max(0.0, 1.0 - std::abs(static_cast<double>(i) - center) / support);
      t.weights.push_back(static_cast<float>(wgt));
      total += wgt;
    }
    if (t.weights.empty()) {
      t.first = static_cast<std::size_t>(
          std::clamp<std::ptrdiff_t>(std::lround(center), 0, static_cast<std::ptrdiff_t>(in) - 1));
      t.weights.push_back(1.0f);
      total = 1.0;
    }
    for (auto& wgt : t.weights) wgt = static_cast<float>(wgt / total);
    taps[o] = std::move(t);
  }
  return taps;
}

}  // namespace

Image resize(const Image& img, std::size_t height, std::size_t width) {
  if (img.height == height && img.width == width) return img;
  if (img.empty() || height == 0 || width == 0) throw DataError("cannot resize an empty image");
  const auto xt = resample_taps(img.width, width);
  const auto yt = resample_taps(img.height, height);

  Image tmp(img.height, width);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const auto& t = xt[x];
      for (std::size_t c = 0; c < 3; ++c) {
        float acc = 0.0f;
        for (std::size_t k = 0; k < t.weights.size(); ++k) acc += t.weights[k] * img.at(y, t.first + k, c);
        tmp.at(y, x, c) = acc;
      }
    }
  }
  Image out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    const auto& t = yt[y];
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        float acc = 0.0f;
        for (std::size_t k = 0; k < t.weights.size(); ++k) acc += t.weights[k] * tmp.at(t.first + k, x, c);
        out.at(y, x, c) = std::clamp(acc, 0.0f, 1.0f);
      }
    }
  }
  return out;
}

void append_chw(const Image& img, std::size_t height, std::size_t width, std::vector<float>& out) {
  const Image sized = resize(img, height, width);
  const std::size_t base = out.size();
  out.resize(base + 3 * height * width);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        out[base + (c * height + y) * width + x] = sized.at(y, x, c);
      }
    }
  }
}

nn::Tensor<float> to_batch(std::span<const Image* const> frames, std::size_t height,
                           std::size_t width) {
  if (frames.empty()) throw DataError("cannot batch zero frames");
  std::vector<float> data;
  data.reserve(frames.size() * 3 * height * width);
  for (const Image* f : frames) append_chw(*f, height, width, data);
  return nn::Tensor<float>({frames.size(), 3, height, width}, std::move(data));
}

Image from_chw(std::span<const float> chw, std::size_t height, std::size_t width) {
  if (chw.size() != 3 * height * width) throw ShapeError("from_chw: size mismatch");
  Image img(height, width);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        img.at(y, x, c) = std::clamp(chw[(c * height + y) * width + x], 0.0f, 1.0f);
      }
    }
  }
  return img;
}

double mean_abs_diff(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width) throw ShapeError("mean_abs_diff: size mismatch");
  if (a.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) total += std::abs(a.pixels[i] - b.pixels[i]);
  return total / static_cast<double>(a.pixels.size());
}

}  // namespace lvr::dataio
