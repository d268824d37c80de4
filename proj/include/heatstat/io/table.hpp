#pragma once

// Flat result tables written as CSV with a header row. Floats use 17
// significant digits so that parse(emit(t)) == t bit for bit.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "heatstat/error.hpp"

namespace heatstat::io {

using Cell = std::variant<std::monostate, long long, double, std::string>;

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string format_cell(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(const std::string& v) const {
      // A string that would re-parse as a number must be quoted.
      return v.empty() || v.find_first_not_of("0123456789+-.eE") == std::string::npos
                 ? "\"" + v + "\""
                 : quote_if_needed(v);
    }
  };
  return std::visit(Visitor{}, c);
}

inline Cell parse_cell(std::string_view text, bool quoted) {
  if (quoted) return std::string(text);
  if (text.empty()) return std::monostate{};
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  if (text.find_first_of(".eE") == std::string_view::npos) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc{} && ptr == text.data() + text.size()) return v;
  } else {
    const std::string owned(text);
    char* end = nullptr;
    const double v = std::strtod(owned.c_str(), &end);
    if (end == owned.c_str() + owned.size()) return v;
  }
  return std::string(text);
}

/// Splits one CSV record starting at `pos`; advances `pos` past the newline.
inline std::vector<std::pair<std::string, bool>> split_record(std::string_view text, std::size_t& pos) {
  std::vector<std::pair<std::string, bool>> fields;
  std::string field;
  bool quoted = false;
  bool in_quotes = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (in_quotes) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          field += '"';
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(std::move(field), quoted);
      field.clear();
      quoted = false;
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.emplace_back(std::move(field), quoted);
  return fields;
}

}  // namespace detail

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
      throw Error(Errc::dimension_mismatch, "row width differs from column count");
    }
    rows.push_back(std::move(row));
  }

  std::string to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out += ',';
      out += detail::quote_if_needed(columns[i]);
    }
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += detail::format_cell(row[i]);
      }
      out += '\n';
    }
    return out;
  }

  static ResultTable parse_csv(std::string_view text) {
    ResultTable t;
    std::size_t pos = 0;
    if (text.empty()) throw Error(Errc::invalid_argument, "empty CSV");
    for (auto& [name, q] : detail::split_record(text, pos)) t.columns.push_back(name);
    while (pos < text.size()) {
      auto fields = detail::split_record(text, pos);
      if (fields.size() != t.columns.size()) {
        throw Error(Errc::invalid_argument, "CSV row width differs from header");
      }
      std::vector<Cell> row;
      for (auto& [f, q] : fields) row.push_back(detail::parse_cell(f, q));
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  friend bool operator==(const ResultTable& a, const ResultTable& b) {
    if (a.columns != b.columns || a.rows.size() != b.rows.size()) return false;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      if (a.rows[r].size() != b.rows[r].size()) return false;
      for (std::size_t c = 0; c < a.rows[r].size(); ++c) {
        const Cell& x = a.rows[r][c];
        const Cell& y = b.rows[r][c];
        if (x.index() != y.index()) return false;
        if (const double* dx = std::get_if<double>(&x)) {
          const double dy = std::get<double>(y);
          if (!(std::isnan(*dx) && std::isnan(dy)) && *dx != dy) return false;
        } else if (x != y) {
          return false;
        }
      }
    }
    return true;
  }
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::runtime_error("failed writing " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// FNV-1a, used to fingerprint a canonical config dump.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace heatstat::io
