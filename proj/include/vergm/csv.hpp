#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "vergm/common.hpp"

namespace vergm {

/// Deterministic, locale-free number formatting (shortest round-trip form).
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

inline std::string format_int(std::int64_t v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_int failed");
  return std::string(buf, ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

/// Strict integer parse; "3.0" or "3e1" are not integers.
inline bool parse_count(std::string_view text, std::int64_t& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

/// A parsed CSV file. Lines starting with '#' are comments (run artifacts
/// carry their seed/config digest that way) and are skipped, but retained
/// for tooling that wants to inspect them.
struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
  std::vector<std::string> comments;
  std::unordered_map<std::string, int> columns;

  bool has_column(const std::string& name) const { return columns.count(name) > 0; }

  int column(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end())
      throw std::runtime_error(path + ": missing column '" + name + "'");
    return it->second;
  }

  const std::string& cell(std::size_t row, int col) const { return rows[row][col]; }
};

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}
}  // namespace detail

// Fields must not contain commas or quotes; identifiers and labels in this
// toolkit never do, and the validator rejects anything else.
inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable table;
  table.path = path.string();
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '#') {
      table.comments.push_back(line);
      continue;
    }
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      for (std::size_t c = 0; c < table.header.size(); ++c)
        table.columns.emplace(table.header[c], static_cast<int>(c));
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(table.header.size()) +
                               " fields, got " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw std::runtime_error(path.string() + ": empty file");
  return table;
}

/// Writes content to a temp file in the target directory, then renames it
/// over the destination. A crashed run never leaves a partial artifact.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// Incremental CSV builder; callers emit comment lines first, then a header,
/// then rows.
class CsvWriter {
 public:
  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

  void row(const std::vector<std::string>& fields) { out_ << join(fields, ",") << "\n"; }

  std::string str() const { return out_.str(); }

  void write_to(const std::filesystem::path& path) const { atomic_write_file(path, out_.str()); }

 private:
  std::ostringstream out_;
};

}  // namespace vergm
