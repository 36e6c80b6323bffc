#pragma once

// Daily OHLC acquisition: bar/series types, the CSV fixture+cache format,
// the provider payload parser, a sliding-window rate limiter and the
// cache-first quote client.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "eventlens/date.hpp"
#include "eventlens/error.hpp"
#include "eventlens/format.hpp"

namespace eventlens {

enum class InstrumentKind { currency_index, equity, commodity, fx_pair };

inline std::string_view to_string(InstrumentKind kind) {
  switch (kind) {
    case InstrumentKind::currency_index: return "currency_index";
    case InstrumentKind::equity: return "equity";
    case InstrumentKind::commodity: return "commodity";
    case InstrumentKind::fx_pair: return "fx_pair";
  }
  return "equity";
}

inline InstrumentKind parse_instrument_kind(std::string_view text) {
  if (text == "currency_index") return InstrumentKind::currency_index;
  if (text == "equity") return InstrumentKind::equity;
  if (text == "commodity") return InstrumentKind::commodity;
  if (text == "fx_pair") return InstrumentKind::fx_pair;
  fail(ErrorCode::config, "unknown instrument kind '" + std::string(text) + "'");
}

struct InstrumentId {
  std::string symbol;
  InstrumentKind kind = InstrumentKind::equity;

  bool operator==(const InstrumentId&) const = default;
};

struct DailyBar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;

  bool operator==(const DailyBar&) const = default;
};

/// Empty string when the bar is valid, otherwise the violated condition.
inline std::string bar_violation(const DailyBar& b) {
  for (double v : {b.open, b.high, b.low, b.close}) {
    if (!std::isfinite(v) || v <= 0.0) return "quotes must be finite and positive";
  }
  if (b.low > b.high) return "low > high";
  if (b.open < b.low || b.open > b.high) return "open outside [low, high]";
  if (b.close < b.low || b.close > b.high) return "close outside [low, high]";
  return {};
}

struct RawSeries {
  InstrumentId instrument;
  std::vector<DailyBar> bars;
  /// Set when the source only carried a close and open=high=low=close was
  /// filled in.
  bool synthesized_ohlc = false;

  bool operator==(const RawSeries&) const = default;
};

namespace detail {

// Sorts ascending and enforces the bar and strict-ordering invariants.
inline void finalize_bars(std::vector<DailyBar>& bars, const std::string& origin) {
  std::stable_sort(bars.begin(), bars.end(),
                   [](const DailyBar& a, const DailyBar& b) { return a.date < b.date; });
  for (std::size_t i = 0; i < bars.size(); ++i) {
    if (i > 0 && bars[i].date == bars[i - 1].date) {
      fail(ErrorCode::duplicate_date,
           origin + ": duplicate date " + bars[i].date.iso());
    }
    if (auto why = bar_violation(bars[i]); !why.empty()) {
      fail(ErrorCode::invalid_bar,
           origin + ": OHLC invariant violated on " + bars[i].date.iso() + " (" + why + ")");
    }
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-to-temp then rename so readers never observe a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view data,
                              ErrorCode code = ErrorCode::io) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(code, "cannot write '" + tmp.string() + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) fail(code, "short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(code, "cannot move '" + tmp.string() + "' into place: " + ec.message());
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV fixture / cache format

inline constexpr std::string_view kCsvHeader = "date,open,high,low,close";

inline std::string write_csv(const RawSeries& series) {
  std::string out(kCsvHeader);
  out.push_back('\n');
  for (const auto& b : series.bars) {
    out += b.date.iso();
    for (double v : {b.open, b.high, b.low, b.close}) {
      out.push_back(',');
      out += format_decimal(v);
    }
    out.push_back('\n');
  }
  return out;
}

inline void write_csv(const RawSeries& series, const std::filesystem::path& path) {
  detail::write_file_atomic(path, write_csv(series));
}

inline RawSeries parse_csv(std::string_view text, InstrumentId instrument,
                           const std::string& origin = "csv") {
  RawSeries series{std::move(instrument), {}, false};
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= text.size()) return std::nullopt;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    return line;
  };

  auto header = next_line();
  if (!header || *header != kCsvHeader) {
    fail(ErrorCode::bad_header,
         origin + ": header must be exactly '" + std::string(kCsvHeader) + "'");
  }
  while (auto line = next_line()) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      auto comma = line->find(',', start);
      cells.push_back(line->substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    const auto where = origin + ":" + std::to_string(line_no);
    if (cells.size() != 5) fail(ErrorCode::malformed, where + ": expected 5 fields");
    auto date = Date::try_parse(cells[0]);
    if (!date) fail(ErrorCode::malformed, where + ": bad date '" + std::string(cells[0]) + "'");
    double v[4];
    for (int i = 0; i < 4; ++i) {
      auto d = parse_decimal(cells[i + 1]);
      if (!d) {
        fail(ErrorCode::malformed,
             where + ": unparseable decimal '" + std::string(cells[i + 1]) + "'");
      }
      v[i] = *d;
    }
    series.bars.push_back({*date, v[0], v[1], v[2], v[3]});
  }
  detail::finalize_bars(series.bars, origin);
  return series;
}

/// Loads a fixture/cache file. The instrument symbol defaults to the file stem.
inline RawSeries load_csv(const std::filesystem::path& path,
                          std::optional<InstrumentId> instrument = std::nullopt) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::io, "missing file '" + path.string() + "'");
  }
  auto id = instrument ? *instrument : InstrumentId{path.stem().string(), InstrumentKind::equity};
  return parse_csv(detail::read_file(path), std::move(id), path.string());
}

// ---------------------------------------------------------------------------
// Provider payload

/// Parses the provider's daily-series JSON document. Accepts the OHLC shape
/// (`"Time Series ..."` map of date -> {"1. open", ...}) and the close-only
/// commodity shape (`"data": [{"date", "value"}]`). Provider error documents
/// surface as `provider_error` with the provider's own message.
inline RawSeries parse_provider_payload(std::string_view body, InstrumentId instrument = {}) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::malformed, std::string("provider response is not JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::malformed, "provider response is not a JSON object");

  for (const char* key : {"Error Message", "Note", "Information"}) {
    if (auto it = doc.find(key); it != doc.end()) {
      fail(ErrorCode::provider_error,
           "provider error: " + (it->is_string() ? it->get<std::string>() : it->dump()));
    }
  }

  auto decimal_of = [](const json& v, const std::string& what) -> double {
    std::optional<double> d;
    if (v.is_string()) {
      d = parse_decimal(v.get_ref<const std::string&>());
    } else if (v.is_number()) {
      d = v.get<double>();
    }
    if (!d || !std::isfinite(*d)) {
      fail(ErrorCode::malformed, "unparseable decimal " + v.dump() + " for " + what);
    }
    return *d;
  };

  RawSeries series{std::move(instrument), {}, false};
  const std::string origin = "provider payload";

  const json* table = nullptr;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key().rfind("Time Series", 0) == 0 && it->is_object()) {
      table = &*it;
      break;
    }
  }

  if (table) {
    bool any_synth = false;
    for (auto it = table->begin(); it != table->end(); ++it) {
      auto date = Date::try_parse(it.key());
      if (!date) fail(ErrorCode::malformed, "bad date key '" + it.key() + "'");
      if (!it->is_object()) fail(ErrorCode::malformed, "entry " + it.key() + " is not an object");
      std::optional<double> f[4];
      static constexpr std::string_view kNames[4] = {"open", "high", "low", "close"};
      for (auto fit = it->begin(); fit != it->end(); ++fit) {
        // "1. open" -> "open"
        std::string_view k = fit.key();
        if (auto dot = k.find(". "); dot != std::string_view::npos) k = k.substr(dot + 2);
        const auto name = detail::lower(k);
        for (int i = 0; i < 4; ++i) {
          if (name == kNames[i]) f[i] = decimal_of(*fit, it.key() + " " + name);
        }
      }
      if (!f[3]) fail(ErrorCode::malformed, "entry " + it.key() + " has no close");
      if (!f[0] || !f[1] || !f[2]) {
        if (f[0] || f[1] || f[2]) {
          fail(ErrorCode::malformed, "entry " + it.key() + " has a partial OHLC quote");
        }
        f[0] = f[1] = f[2] = f[3];
        any_synth = true;
      }
      series.bars.push_back({*date, *f[0], *f[1], *f[2], *f[3]});
    }
    series.synthesized_ohlc = any_synth;
  } else if (auto data = doc.find("data"); data != doc.end() && data->is_array()) {
    for (const auto& row : *data) {
      if (!row.is_object() || !row.contains("date") || !row.contains("value") ||
          !row["date"].is_string()) {
        fail(ErrorCode::malformed, "data row missing date/value: " + row.dump());
      }
      const auto& ds = row["date"].get_ref<const std::string&>();
      auto date = Date::try_parse(ds);
      if (!date) fail(ErrorCode::malformed, "bad date '" + ds + "'");
      // "." marks a day without an observation.
      if (row["value"].is_string() && row["value"].get_ref<const std::string&>() == ".") continue;
      double c = decimal_of(row["value"], ds);
      series.bars.push_back({*date, c, c, c, c});
    }
    series.synthesized_ohlc = true;
  } else {
    fail(ErrorCode::malformed, "provider response has no daily series map");
  }
  detail::finalize_bars(series.bars, origin);
  return series;
}

// ---------------------------------------------------------------------------
// Provider access

/// Request routing for one symbol: the query parameters sent to the provider
/// (minus the API key).
struct ProviderRoute {
  std::vector<std::pair<std::string, std::string>> params;
  bool close_only = false;
};

struct ProviderConfig {
  std::string base_url = "https://www.alphavantage.co/query";
  std::string api_key;
  int rate_limit = 5;
  std::filesystem::path cache_dir = "cache";
  std::map<std::string, ProviderRoute> routes;

  void validate() const {
    if (rate_limit < 1) fail(ErrorCode::config, "rate_limit must be >= 1");
    if (cache_dir.empty()) fail(ErrorCode::config, "cache_dir must be set");
  }

  ProviderRoute route_for(const InstrumentId& id) const {
    if (auto it = routes.find(id.symbol); it != routes.end()) return it->second;
    return {{{"function", "TIME_SERIES_DAILY"}, {"symbol", id.symbol}, {"outputsize", "full"}},
            false};
  }

  /// Configured key, else `EVENTLENS_API_KEY`, else empty.
  std::string resolved_api_key() const {
    if (!api_key.empty()) return api_key;
    if (const char* env = std::getenv("EVENTLENS_API_KEY")) return env;
    return {};
  }
};

using QueryParams = std::vector<std::pair<std::string, std::string>>;

/// One HTTP GET. Implementations throw `provider_unreachable` on transport
/// failure and return the body otherwise.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string get(const std::string& base_url, const QueryParams& query) = 0;
};

class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;
  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_until(time_point t) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() override { return std::chrono::steady_clock::now(); }
  void sleep_until(time_point t) override { std::this_thread::sleep_until(t); }
};

/// At most `per_minute` acquisitions in any sliding 60 s window. Shared by
/// concurrent fetchers.
class RateLimiter {
 public:
  RateLimiter(int per_minute, Clock& clock) : limit_(per_minute), clock_(clock) {
    if (per_minute < 1) fail(ErrorCode::config, "rate_limit must be >= 1");
  }

  void acquire() {
    std::lock_guard lock(mutex_);
    auto now = clock_.now();
    evict(now);
    if (static_cast<int>(stamps_.size()) >= limit_) {
      clock_.sleep_until(stamps_.front() + kWindow);
      now = clock_.now();
      evict(now);
    }
    stamps_.push_back(now);
  }

 private:
  static constexpr auto kWindow = std::chrono::seconds(60);

  void evict(Clock::time_point now) {
    while (!stamps_.empty() && now - stamps_.front() >= kWindow) stamps_.pop_front();
  }

  int limit_;
  Clock& clock_;
  std::mutex mutex_;
  std::deque<Clock::time_point> stamps_;
};

/// One CSV file per symbol; concurrent readers, exclusive writer per file.
class SeriesCache {
 public:
  explicit SeriesCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path path_for(const std::string& symbol) const {
    return dir_ / (symbol + ".csv");
  }

  std::optional<RawSeries> read(const InstrumentId& id) const {
    auto& m = lock_for(id.symbol);
    std::shared_lock lock(m);
    const auto path = path_for(id.symbol);
    if (!std::filesystem::exists(path)) return std::nullopt;
    return load_csv(path, id);
  }

  void write(const RawSeries& series) const {
    auto& m = lock_for(series.instrument.symbol);
    std::unique_lock lock(m);
    detail::write_file_atomic(path_for(series.instrument.symbol), write_csv(series),
                              ErrorCode::cache_write);
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  static std::shared_mutex& lock_for(const std::string& symbol) {
    static std::mutex registry_mutex;
    static std::map<std::string, std::unique_ptr<std::shared_mutex>> registry;
    std::lock_guard lock(registry_mutex);
    auto& slot = registry[symbol];
    if (!slot) slot = std::make_unique<std::shared_mutex>();
    return *slot;
  }

  std::filesystem::path dir_;
};

struct FetchOptions {
  bool offline = false;
  bool refresh = false;
};

/// Cache-first daily-series client. A cache hit never touches the transport.
class QuoteClient {
 public:
  QuoteClient(ProviderConfig config, Transport& transport, RateLimiter& limiter)
      : config_(std::move(config)), transport_(transport), limiter_(limiter),
        cache_(config_.cache_dir) {
    config_.validate();
  }

  RawSeries fetch_daily(const InstrumentId& instrument, FetchOptions opts = {}) {
    if (instrument.symbol.empty()) fail(ErrorCode::config, "empty instrument symbol");
    const auto route = config_.route_for(instrument);
    if (!opts.refresh) {
      if (auto cached = cache_.read(instrument)) {
        cached->synthesized_ohlc = route.close_only;
        return *cached;
      }
    }
    if (opts.offline) {
      fail(ErrorCode::io, "offline and no cached series for " + instrument.symbol + " at '" +
                              cache_.path_for(instrument.symbol).string() + "'");
    }
    const auto key = config_.resolved_api_key();
    if (key.empty()) {
      fail(ErrorCode::missing_api_key,
           "cache miss for " + instrument.symbol + " and no API key (set EVENTLENS_API_KEY)");
    }
    QueryParams query = route.params;
    query.emplace_back("apikey", key);
    limiter_.acquire();
    const auto body = transport_.get(config_.base_url, query);
    RawSeries series;
    try {
      series = parse_provider_payload(body, instrument);
    } catch (const Error& e) {
      throw Error(e.code(), instrument.symbol + ": " + e.what());
    }
    cache_.write(series);
    return series;
  }

  const SeriesCache& cache() const { return cache_; }
  const ProviderConfig& config() const { return config_; }

 private:
  ProviderConfig config_;
  Transport& transport_;
  RateLimiter& limiter_;
  SeriesCache cache_;
};

}  // namespace eventlens
