#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "eventlens/error.hpp"

namespace eventlens {

/// Calendar date at trading-day granularity, no time zone.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  constexpr Date(int year, unsigned month, unsigned day)
      : days_(std::chrono::year{year} / std::chrono::month{month} /
              std::chrono::day{day}) {}

  constexpr std::chrono::sys_days days() const { return days_; }
  constexpr std::chrono::year_month_day ymd() const {
    return std::chrono::year_month_day{days_};
  }

  constexpr Date operator+(int n) const {
    return Date{days_ + std::chrono::days{n}};
  }

  constexpr unsigned weekday() const {
    return std::chrono::weekday{days_}.c_encoding();
  }

  constexpr auto operator<=>(const Date&) const = default;

  /// Strict `YYYY-MM-DD`; returns nullopt for anything else, including
  /// out-of-range calendar days.
  static std::optional<Date> try_parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto digits = [](std::string_view s, auto& out) {
      for (char c : s) {
        if (c < '0' || c > '9') return false;
      }
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      return ec == std::errc{} && p == s.data() + s.size();
    };
    if (!digits(text.substr(0, 4), y) || !digits(text.substr(5, 2), m) ||
        !digits(text.substr(8, 2), d)) {
      return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                    std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{std::chrono::sys_days{ymd}};
  }

  static Date parse(std::string_view text) {
    if (auto d = try_parse(text)) return *d;
    fail(ErrorCode::malformed, "invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  }

  std::string iso() const {
    const auto v = ymd();
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()),
                  static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
    return buf;
  }

 private:
  std::chrono::sys_days days_{};
};

}  // namespace eventlens
