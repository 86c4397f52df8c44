#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace varlens {

/// Flat "key = value" configuration text. Blank lines and lines starting
/// with '#' are ignored; a repeated key is a config error.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig load(const std::filesystem::path& path);
  static KeyValueConfig parse(std::istream& in, const std::string& origin);

  bool has(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;

  /// Config error naming the first key outside `known` (catches typos).
  void require_known(const std::set<std::string>& known) const;

 private:
  std::optional<std::string> raw(const std::string& key) const;

  std::string origin_;
  std::map<std::string, std::string> values_;
};

}  // namespace varlens
