#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace tdw {

/// Flat `key = value` configuration text. `#` starts a comment; values may be
/// wrapped in double quotes. Later keys override earlier ones.
class KvConfig {
 public:
  static KvConfig parse(std::string_view text, std::string_view source = "<config>");
  static KvConfig load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string_view fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
  const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

  /// Directory of the loaded file; relative paths in values resolve against it.
  const std::filesystem::path& base_dir() const { return base_dir_; }
  std::filesystem::path path_or(std::string_view key, std::string_view fallback) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
  std::filesystem::path base_dir_ = ".";
  std::string source_;
};

}  // namespace tdw
