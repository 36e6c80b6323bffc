#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

namespace eventlens {

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_decimal(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

/// Finite decimal, `.` separator, optional exponent. Rejects surrounding
/// whitespace, `inf`/`nan` and trailing garbage.
inline std::optional<double> parse_decimal(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') return std::nullopt;
  auto [p, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || p != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace eventlens
