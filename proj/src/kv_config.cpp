#include "tdw/kv_config.hpp"

#include <fmt/format.h>

#include <charconv>

#include "tdw/csv.hpp"
#include "tdw/error.hpp"

namespace tdw {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

KvConfig KvConfig::parse(std::string_view text, std::string_view source) {
  KvConfig cfg;
  cfg.source_ = std::string(source);
  size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == '[') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParse, fmt::format("{}:{}: expected key = value", source, line_no));
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (auto hash = value.find(" #"); hash != std::string_view::npos) {
      value = trim(value.substr(0, hash));
    }
    if (key.empty()) {
      throw Error(ErrorCode::kParse, fmt::format("{}:{}: empty key", source, line_no));
    }
    cfg.values_[std::string(key)] = std::string(value);
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  auto cfg = parse(read_file(path), path.string());
  cfg.base_dir_ = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return cfg;
}

bool KvConfig::has(std::string_view key) const { return values_.find(key) != values_.end(); }

std::optional<std::string> KvConfig::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KvConfig::get_or(std::string_view key, std::string_view fallback) const {
  auto v = get(key);
  return v ? *v : std::string(fallback);
}

long long KvConfig::get_int(std::string_view key, long long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw Error(ErrorCode::kParse, fmt::format("{}: '{}' is not an integer: '{}'", source_, key, *v));
  }
  return out;
}

double KvConfig::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    size_t used = 0;
    double out = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, fmt::format("{}: '{}' is not a number: '{}'", source_, key, *v));
  }
}

bool KvConfig::get_bool(std::string_view key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw Error(ErrorCode::kParse, fmt::format("{}: '{}' is not a boolean: '{}'", source_, key, *v));
}

std::filesystem::path KvConfig::path_or(std::string_view key, std::string_view fallback) const {
  std::filesystem::path p = get_or(key, fallback);
  return p.is_absolute() ? p : base_dir_ / p;
}

}  // namespace tdw
