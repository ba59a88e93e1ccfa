#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace lvr::eval {

/// Flat "key = value" settings with namespaced keys ("ae.latent_dim = 32").
/// '#' starts a comment; blank lines are ignored.
class Config {
 public:
  Config() = default;

  /// ConfigError naming the line on malformed input or a repeated key.
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated reals.
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  /// Keys that were never read through a getter.
  std::vector<std::string> unused_keys() const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> read_;
};

}  // namespace lvr::eval
