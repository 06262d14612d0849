#pragma once

#include <charconv>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mad::detail {

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline bool is_space(char c) { return c == ' ' || c == '\t'; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Splits on runs of whitespace. When `max_fields` is reached, the last field
// holds the remainder of the line (trimmed), embedded spaces included.
inline std::vector<std::string_view> split_ws(std::string_view s, std::size_t max_fields = 0) {
  std::vector<std::string_view> out;
  s = trim(s);
  while (!s.empty()) {
    if (max_fields != 0 && out.size() + 1 == max_fields) {
      out.push_back(trim(s));
      break;
    }
    std::size_t end = 0;
    while (end < s.size() && !is_space(s[end])) ++end;
    out.push_back(s.substr(0, end));
    s = trim(s.substr(end));
  }
  return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  double value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

// %.10g, the precision used for distances and matrices in every output file.
inline std::string format_sig10(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

}  // namespace mad::detail
