#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace tdw {

struct CsvRow {
  size_t line = 0;  // 1-based line number in the source text
  std::vector<std::string> fields;
};

/// Header-addressed CSV content (RFC 4180 quoting, comma separated).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  /// Column position by header name, or -1.
  int column(std::string_view name) const;
  /// Throws Error(kBadInput) naming `source` if any column is absent.
  std::vector<int> require_columns(std::initializer_list<std::string_view> names,
                                   std::string_view source) const;
};

CsvTable parse_csv(std::string_view text);

/// Reads a whole file; throws Error(kMissingFile) naming the path when absent.
std::string read_file(const std::filesystem::path& path);
CsvTable read_csv_file(const std::filesystem::path& path);

/// Writes via a sibling temporary file and rename, so readers observe either
/// the previous or the complete new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

void append_csv_field(std::string& out, std::string_view field);

template <typename... Fields>
void append_csv_line(std::string& out, const Fields&... fields) {
  bool first = true;
  ((out += first ? "" : ",", append_csv_field(out, std::string_view(fields)), first = false), ...);
  out += '\n';
}

}  // namespace tdw
