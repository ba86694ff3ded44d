#pragma once

// Minimal comma-separated table I/O. Fields are never quoted: identifiers
// containing commas, quotes or line breaks are rejected on write.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "picscore/errors.hpp"

namespace picscore::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column, if present.
  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }

  std::size_t require_column(std::string_view name) const {
    auto idx = column(name);
    if (!idx) throw ParseError(0, "missing required column '" + std::string(name) + "'");
    return *idx;
  }
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    auto field = trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Parses a table from a stream. Blank lines are skipped; every data row must
/// have exactly as many fields as the header.
inline Table parse(std::istream& in) {
  Table table;
  std::string line;
  bool have_header = false;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (!have_header) {
      table.header = split_line(line);
      have_header = true;
      continue;
    }
    ++data_row;
    auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      throw ParseError(data_row, "expected " + std::to_string(table.header.size()) + " fields, got " +
                                     std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return parse(in);
}

/// Strict decimal parse; rejects trailing garbage and non-finite values.
inline double parse_real(std::string_view text, std::size_t row, std::string_view what = "score") {
  std::string buf(trim(text));
  if (buf.empty()) throw ParseError(row, "empty " + std::string(what));
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(buf, &used);
  } catch (const std::exception&) {
    throw ParseError(row, "cannot parse " + std::string(what) + " '" + buf + "'");
  }
  if (used != buf.size()) throw ParseError(row, "cannot parse " + std::string(what) + " '" + buf + "'");
  if (!std::isfinite(value)) throw ParseError(row, "non-finite " + std::string(what) + " '" + buf + "'");
  return value;
}

/// Fixed six-digit decimal formatting used for every numeric output column.
inline std::string fixed6(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

inline void check_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") != std::string_view::npos) {
    throw ValidationError("field '" + std::string(field) + "' contains a reserved character");
  }
}

/// Writes `fields` joined with commas and a trailing newline.
inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    check_field(fields[i]);
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

}  // namespace picscore::csv
