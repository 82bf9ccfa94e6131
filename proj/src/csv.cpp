#include "tdw/csv.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "tdw/error.hpp"

namespace tdw {

int CsvTable::column(std::string_view name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> CsvTable::require_columns(std::initializer_list<std::string_view> names,
                                           std::string_view source) const {
  std::vector<int> out;
  for (auto name : names) {
    int c = column(name);
    if (c < 0) {
      throw Error(ErrorCode::kBadInput, fmt::format("{}: missing column '{}'", source, name));
    }
    out.push_back(c);
  }
  return out;
}

CsvTable parse_csv(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  CsvTable table;
  std::vector<std::string> fields;
  std::string field;
  size_t line = 1;
  size_t record_line = 1;
  bool in_quotes = false;
  bool header_done = false;
  bool record_has_content = false;

  auto end_record = [&] {
    fields.push_back(std::move(field));
    field.clear();
    bool blank = !record_has_content && fields.size() == 1 && fields[0].empty();
    if (!blank) {
      if (!header_done) {
        table.header = std::move(fields);
        header_done = true;
      } else {
        table.rows.push_back(CsvRow{record_line, std::move(fields)});
      }
    }
    fields.clear();
    record_has_content = false;
  };

  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        record_has_content = true;
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        record_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        field += c;
        record_has_content = true;
    }
  }
  if (record_has_content || !field.empty()) end_record();
  return table;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

CsvTable read_csv_file(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::kIo, fmt::format("short write to '{}'", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("rename to '{}': {}", path.string(), ec.message()));
}

void append_csv_field(std::string& out, std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    out += field;
    return;
  }
  out += '"';
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

}  // namespace tdw
