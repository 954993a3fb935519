#pragma once

// Locale-independent CSV emission and a strict reader: '.' decimals via
// std::to_chars (shortest round-trip form), LF line endings, fixed column
// count per file.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "chanest/errors.hpp"

namespace chanest::csv {

inline std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw DataError("csv: number formatting failed");
  return std::string(buf, ptr);
}

inline std::string number(std::size_t v) { return std::to_string(v); }

inline double parse_double(std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw DataError("csv: not a number: '" + std::string(text) + "'");
  return v;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw ArgumentError("csv: row width does not match header");
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

  std::string str() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open " + path.string() + " for writing");
    const std::string text = str();
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw DataError("write failed: " + path.string());
  }

  /// Strict parse: LF only, no blank lines, every row as wide as the header.
  static Table parse(std::string_view text) {
    if (text.find('\r') != std::string_view::npos) throw DataError("csv: CR line ending");
    if (text.empty() || text.back() != '\n') throw DataError("csv: missing final LF");
    std::vector<std::vector<std::string>> lines;
    std::size_t start = 0;
    while (start < text.size()) {
      const std::size_t end = text.find('\n', start);
      const std::string_view line = text.substr(start, end - start);
      if (line.empty()) throw DataError("csv: blank line");
      std::vector<std::string> cells;
      std::size_t c = 0;
      while (true) {
        const std::size_t comma = line.find(',', c);
        cells.emplace_back(line.substr(c, comma == std::string_view::npos ? line.size() - c : comma - c));
        if (comma == std::string_view::npos) break;
        c = comma + 1;
      }
      lines.push_back(std::move(cells));
      start = end + 1;
    }
    Table t(std::move(lines.front()));
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].size() != t.header_.size())
        throw DataError("csv: row " + std::to_string(i) + " has " + std::to_string(lines[i].size()) +
                        " columns, header has " + std::to_string(t.header_.size()));
      t.rows_.push_back(std::move(lines[i]));
    }
    return t;
  }

  static Table load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace chanest::csv
