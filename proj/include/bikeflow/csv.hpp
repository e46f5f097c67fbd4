#pragma once

#include <charconv>
#include <cstdlib>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "bikeflow/errors.hpp"

namespace bikeflow::csv {

// Splits one CSV line. Fields containing commas may be double-quoted;
// embedded quotes are doubled.
inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

// Quotes a field only when it needs it (commas or quotes inside).
inline std::string quote_if_needed(const std::string& field) {
  if (field.find(',') == std::string::npos &&
      field.find('"') == std::string::npos)
    return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Shortest representation that round-trips through parsing. Keeps stored
// coordinates bit-stable across serialize/load cycles.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline long parse_long(std::string_view s, long line_no) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw SchemaViolation("not an integer: '" + std::string(s) + "'", line_no);
  return v;
}

inline double parse_double(std::string_view s, long line_no) {
  // from_chars<double> exists in libstdc++ 11, strtod keeps this portable
  std::string tmp(s);
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || tmp.empty())
    throw SchemaViolation("not a number: '" + tmp + "'", line_no);
  return v;
}

}  // namespace bikeflow::csv
