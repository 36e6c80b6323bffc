#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eventlens/date.hpp"
#include "eventlens/error.hpp"
#include "eventlens/format.hpp"
#include "eventlens/ingest.hpp"

namespace eventlens {

/// Closed interval of calendar dates.
struct DateWindow {
  Date start;
  Date end;

  DateWindow() = default;
  DateWindow(Date s, Date e) : start(s), end(e) {
    if (end < start) {
      fail(ErrorCode::config, "window end " + end.iso() + " precedes start " + start.iso());
    }
  }

  bool contains(Date d) const { return start <= d && d <= end; }

  /// Overlap of two windows, nullopt when disjoint.
  std::optional<DateWindow> intersect(const DateWindow& other) const {
    auto s = std::max(start, other.start);
    auto e = std::min(end, other.end);
    if (e < s) return std::nullopt;
    return DateWindow{s, e};
  }

  std::string str() const { return start.iso() + ".." + end.iso(); }

  bool operator==(const DateWindow&) const = default;
};

enum class BarField { open, high, low, close };

inline std::string_view to_string(BarField f) {
  switch (f) {
    case BarField::open: return "open";
    case BarField::high: return "high";
    case BarField::low: return "low";
    case BarField::close: return "close";
  }
  return "close";
}

inline double field_of(const DailyBar& bar, BarField f) {
  switch (f) {
    case BarField::open: return bar.open;
    case BarField::high: return bar.high;
    case BarField::low: return bar.low;
    case BarField::close: return bar.close;
  }
  return bar.close;
}

inline constexpr BarField kAllFields[] = {BarField::open, BarField::high, BarField::low,
                                          BarField::close};

struct ColumnKey {
  std::string symbol;
  BarField field = BarField::close;

  auto operator<=>(const ColumnKey&) const = default;

  /// `SYMBOL.field`
  std::string str() const { return symbol + "." + std::string(to_string(field)); }

  static ColumnKey parse(std::string_view text) {
    auto dot = text.rfind('.');
    if (dot == std::string_view::npos || dot == 0) {
      fail(ErrorCode::config, "column key '" + std::string(text) + "' is not SYMBOL.field");
    }
    auto field = text.substr(dot + 1);
    for (auto f : kAllFields) {
      if (field == to_string(f)) return {std::string(text.substr(0, dot)), f};
    }
    fail(ErrorCode::config, "column key '" + std::string(text) + "' has unknown field");
  }
};

/// Dense date-indexed table. Immutable once built; the constructor enforces
/// strictly increasing dates and full, finite columns.
class AlignedPanel {
 public:
  using Columns = std::map<ColumnKey, std::vector<double>>;

  AlignedPanel() = default;
  AlignedPanel(std::vector<Date> dates, Columns columns)
      : dates_(std::move(dates)), columns_(std::move(columns)) {
    for (std::size_t i = 1; i < dates_.size(); ++i) {
      if (!(dates_[i - 1] < dates_[i])) {
        fail(ErrorCode::invariant, "panel dates not strictly increasing at " + dates_[i].iso());
      }
    }
    for (const auto& [key, values] : columns_) {
      if (values.size() != dates_.size()) {
        fail(ErrorCode::invariant, "column " + key.str() + " has " +
                                       std::to_string(values.size()) + " rows, expected " +
                                       std::to_string(dates_.size()));
      }
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
          fail(ErrorCode::invariant,
               "column " + key.str() + " non-finite at " + dates_[i].iso());
        }
      }
    }
  }

  const std::vector<Date>& dates() const { return dates_; }
  const Columns& columns() const { return columns_; }
  std::size_t rows() const { return dates_.size(); }

  bool has_column(const ColumnKey& key) const { return columns_.contains(key); }

  std::vector<ColumnKey> keys() const {
    std::vector<ColumnKey> out;
    for (const auto& [k, v] : columns_) out.push_back(k);
    return out;
  }

  std::span<const double> column(const ColumnKey& key) const {
    auto it = columns_.find(key);
    if (it == columns_.end()) fail(ErrorCode::unknown_column, "unknown column " + key.str());
    return it->second;
  }

  bool operator==(const AlignedPanel&) const = default;

 private:
  std::vector<Date> dates_;
  Columns columns_;
};

/// Inner join of all series on date; one column per (symbol, field).
inline AlignedPanel align(std::span<const RawSeries> series_set, std::span<const BarField> fields) {
  if (series_set.empty()) fail(ErrorCode::empty_input, "align: no series given");
  if (fields.empty()) fail(ErrorCode::empty_input, "align: no fields requested");
  std::set<std::string> symbols;
  for (const auto& s : series_set) {
    if (!symbols.insert(s.instrument.symbol).second) {
      fail(ErrorCode::duplicate_symbol, "align: duplicate symbol " + s.instrument.symbol);
    }
    if (s.bars.empty()) {
      fail(ErrorCode::empty_input, "align: series " + s.instrument.symbol + " is empty");
    }
  }

  std::vector<Date> common;
  for (const auto& b : series_set.front().bars) common.push_back(b.date);
  for (const auto& s : series_set.subspan(1)) {
    std::vector<Date> theirs;
    for (const auto& b : s.bars) theirs.push_back(b.date);
    std::vector<Date> next;
    std::set_intersection(common.begin(), common.end(), theirs.begin(), theirs.end(),
                          std::back_inserter(next));
    common = std::move(next);
  }
  if (common.empty()) fail(ErrorCode::empty_intersection, "align: series share no dates");

  AlignedPanel::Columns columns;
  for (const auto& s : series_set) {
    std::vector<const DailyBar*> picked;
    picked.reserve(common.size());
    auto it = s.bars.begin();
    for (const auto& d : common) {
      it = std::lower_bound(it, s.bars.end(), d,
                            [](const DailyBar& b, Date x) { return b.date < x; });
      picked.push_back(&*it);
    }
    for (auto f : fields) {
      std::vector<double> col;
      col.reserve(picked.size());
      for (const auto* b : picked) col.push_back(field_of(*b, f));
      columns[{s.instrument.symbol, f}] = std::move(col);
    }
  }
  return AlignedPanel(std::move(common), std::move(columns));
}

inline AlignedPanel align(std::span<const RawSeries> series_set,
                          std::initializer_list<BarField> fields) {
  return align(series_set, std::span<const BarField>(fields.begin(), fields.size()));
}

/// Rows with window.start <= date <= window.end.
inline AlignedPanel slice(const AlignedPanel& panel, const DateWindow& window) {
  const auto& dates = panel.dates();
  auto lo = std::lower_bound(dates.begin(), dates.end(), window.start);
  auto hi = std::upper_bound(dates.begin(), dates.end(), window.end);
  if (lo >= hi) fail(ErrorCode::empty_window, "window " + window.str() + " contains no panel dates");
  const auto a = static_cast<std::size_t>(lo - dates.begin());
  const auto b = static_cast<std::size_t>(hi - dates.begin());
  AlignedPanel::Columns cols;
  for (const auto& [key, values] : panel.columns()) {
    cols.emplace(key, std::vector<double>(values.begin() + a, values.begin() + b));
  }
  return AlignedPanel(std::vector<Date>(lo, hi), std::move(cols));
}

inline std::vector<double> column(const AlignedPanel& panel, const ColumnKey& key) {
  auto c = panel.column(key);
  return {c.begin(), c.end()};
}

/// `date` column first, then one `SYMBOL.field` column per key.
inline std::string panel_to_csv(const AlignedPanel& panel) {
  std::string out = "date";
  for (const auto& [key, v] : panel.columns()) out += "," + key.str();
  out += "\n";
  for (std::size_t i = 0; i < panel.rows(); ++i) {
    out += panel.dates()[i].iso();
    for (const auto& [key, v] : panel.columns()) out += "," + format_decimal(v[i]);
    out += "\n";
  }
  return out;
}

}  // namespace eventlens
