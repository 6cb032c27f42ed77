#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace mqcont {

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf, ptr);
}

/// Strict full-string parse; throws std::invalid_argument on anything else.
inline double parse_double(std::string_view text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  return v;
}

inline int parse_int(std::string_view text) {
  int v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  return v;
}

inline std::string_view trim(std::string_view s) {
  const auto notspace = [](char c) { return c != ' ' && c != '\t' && c != '\r'; };
  while (!s.empty() && !notspace(s.front())) s.remove_prefix(1);
  while (!s.empty() && !notspace(s.back())) s.remove_suffix(1);
  return s;
}

} // namespace mqcont
