#pragma once

// End-to-end event-impact protocol: correlation structure before/after the
// event, per-target OLS fit on a training window, scoring on a test window,
// and a counterfactual projection over the event window compared against
// realized closes.

#include <filesystem>
#include <future>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "eventlens/digest.hpp"
#include "eventlens/error.hpp"
#include "eventlens/ingest.hpp"
#include "eventlens/metrics.hpp"
#include "eventlens/panel.hpp"
#include "eventlens/regress.hpp"
#include "eventlens/stats.hpp"

namespace eventlens {

enum class ProjectionMode {
  /// Source-window feature rows re-dated onto the projection dates.
  date_shifted,
  /// Realized projection-window features fed verbatim.
  oracle_features,
};

inline std::string_view to_string(ProjectionMode m) {
  return m == ProjectionMode::date_shifted ? "date_shifted" : "oracle_features";
}

inline ProjectionMode parse_projection_mode(std::string_view text) {
  if (text == "date_shifted") return ProjectionMode::date_shifted;
  if (text == "oracle_features") return ProjectionMode::oracle_features;
  fail(ErrorCode::config, "unknown projection mode '" + std::string(text) +
                              "' (expected date_shifted or oracle_features)");
}

struct ScenarioConfig {
  std::string name;
  std::vector<InstrumentId> universe;
  /// Close columns of these symbols enter the correlation matrices; empty
  /// means the whole universe.
  std::vector<std::string> correlation_symbols;
  std::vector<FeatureSpec> feature_specs;
  DateWindow train_window;
  DateWindow test_window;
  DateWindow correlation_before;
  DateWindow correlation_after;
  DateWindow source_window;
  DateWindow projection_window;
  ProjectionMode projection_mode = ProjectionMode::date_shifted;
  ProviderConfig provider;

  std::vector<std::string> correlation_set() const {
    if (!correlation_symbols.empty()) return correlation_symbols;
    std::vector<std::string> out;
    for (const auto& u : universe) out.push_back(u.symbol);
    return out;
  }

  void validate() const {
    if (universe.empty()) fail(ErrorCode::config, "universe is empty");
    std::set<std::string> symbols;
    for (const auto& u : universe) {
      if (u.symbol.empty()) fail(ErrorCode::config, "universe contains an empty symbol");
      if (!symbols.insert(u.symbol).second) {
        fail(ErrorCode::config, "universe lists " + u.symbol + " twice");
      }
    }
    if (feature_specs.empty()) fail(ErrorCode::config, "no feature_specs");
    std::set<std::string> targets;
    for (const auto& spec : feature_specs) {
      spec.validate();
      if (!targets.insert(spec.target.symbol).second) {
        fail(ErrorCode::config, "two feature_specs target " + spec.target.symbol);
      }
      if (!symbols.contains(spec.target.symbol)) {
        fail(ErrorCode::config, "target " + spec.target.str() + " not in universe");
      }
      for (const auto& f : spec.features) {
        if (!symbols.contains(f.symbol)) {
          fail(ErrorCode::config, "feature " + f.str() + " of " + spec.target.symbol +
                                      " not in universe");
        }
      }
    }
    for (const auto& s : correlation_symbols) {
      if (!symbols.contains(s)) fail(ErrorCode::config, "correlation symbol " + s + " not in universe");
    }
    if (!(train_window.end < test_window.start)) {
      fail(ErrorCode::config, "train window " + train_window.str() + " must precede test window " +
                                  test_window.str());
    }
  }
};

struct TargetOutcome {
  FeatureSpec spec;
  RegressionModel model;
  MetricsReport test_metrics;
  std::vector<Date> projection_dates;
  std::vector<double> counterfactual;
  std::vector<double> realized;
  MetricsReport divergence_metrics;

  const std::string& symbol() const { return spec.target.symbol; }
  bool operator==(const TargetOutcome&) const = default;
};

struct Provenance {
  std::string config_digest;
  /// symbol -> sha256 of the series in CSV form.
  std::map<std::string, std::string> data_digests;
  ProjectionMode projection_mode = ProjectionMode::date_shifted;
  std::size_t source_rows = 0;
  std::size_t projection_rows = 0;
  /// Times the source rows wrapped around to fill the projection window.
  std::size_t projection_cycles = 0;
  bool source_truncated = false;

  bool operator==(const Provenance&) const = default;
};

struct ScenarioReport {
  std::vector<TargetOutcome> targets;
  CorrelationMatrix correlation_before;
  CorrelationMatrix correlation_after;
  Provenance provenance;

  bool operator==(const ScenarioReport&) const = default;
};

struct ProjectedFeatures {
  AlignedPanel panel;
  std::size_t source_rows = 0;
  std::size_t cycles = 0;
  bool truncated = false;
};

/// Feature rows for the counterfactual over the projection window, restricted
/// to `spec`'s feature columns. In date_shifted mode source rows are placed on
/// the projection dates in order, cycling when the source is shorter and
/// truncating when it is longer.
inline ProjectedFeatures projection_features(const AlignedPanel& panel,
                                             const ScenarioConfig& config,
                                             const FeatureSpec& spec) {
  const auto projection = slice(panel, config.projection_window);
  AlignedPanel::Columns cols;
  if (config.projection_mode == ProjectionMode::oracle_features) {
    for (const auto& f : spec.features) cols.emplace(f, column(projection, f));
    return {AlignedPanel(projection.dates(), std::move(cols)), 0, 0, false};
  }

  const auto source = slice(panel, config.source_window);
  const auto k = source.rows();
  const auto m = projection.rows();
  for (const auto& f : spec.features) {
    const auto src = source.column(f);
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = src[i % k];
    cols.emplace(f, std::move(out));
  }
  return {AlignedPanel(projection.dates(), std::move(cols)), k, (m - 1) / k, k > m};
}

namespace detail {

inline TargetOutcome run_target(const AlignedPanel& panel, const ScenarioConfig& config,
                                const FeatureSpec& spec) {
  try {
    TargetOutcome out;
    out.spec = spec;
    out.model = fit_ols(slice(panel, config.train_window), spec);

    const auto test = slice(panel, config.test_window);
    out.test_metrics = score(test.column(spec.target), predict(out.model, test));

    const auto features = projection_features(panel, config, spec);
    out.projection_dates = features.panel.dates();
    out.counterfactual = predict(out.model, features.panel);
    out.realized = column(slice(panel, config.projection_window), spec.target);
    out.divergence_metrics = score(out.realized, out.counterfactual);
    return out;
  } catch (const Error& e) {
    throw Error(e.code(), "target " + spec.target.symbol + ": " + e.what());
  }
}

}  // namespace detail

inline ScenarioReport run_scenario(const ScenarioConfig& config, std::span<const RawSeries> data,
                                   const std::string& config_digest) {
  config.validate();
  std::vector<RawSeries> ordered;
  ScenarioReport report;
  for (const auto& u : config.universe) {
    auto it = std::find_if(data.begin(), data.end(),
                           [&](const RawSeries& s) { return s.instrument.symbol == u.symbol; });
    if (it == data.end()) fail(ErrorCode::config, "no data supplied for " + u.symbol);
    ordered.push_back(*it);
    report.provenance.data_digests[u.symbol] = sha256_hex(write_csv(*it));
  }
  const auto panel = align(ordered, kAllFields);

  std::vector<ColumnKey> corr_keys;
  for (const auto& s : config.correlation_set()) corr_keys.push_back({s, BarField::close});
  auto correlate = [&](const DateWindow& w, const char* label) {
    try {
      return correlation_matrix(slice(panel, w), corr_keys);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(label) + ": " + e.what());
    }
  };
  report.correlation_before = correlate(config.correlation_before, "correlation_before");
  report.correlation_after = correlate(config.correlation_after, "correlation_after");

  std::vector<std::future<TargetOutcome>> jobs;
  for (const auto& spec : config.feature_specs) {
    jobs.push_back(std::async(std::launch::async, [&panel, &config, &spec] {
      return detail::run_target(panel, config, spec);
    }));
  }
  for (auto& j : jobs) report.targets.push_back(j.get());

  auto& prov = report.provenance;
  prov.config_digest = config_digest;
  prov.projection_mode = config.projection_mode;
  prov.projection_rows = slice(panel, config.projection_window).rows();
  if (config.projection_mode == ProjectionMode::date_shifted) {
    prov.source_rows = slice(panel, config.source_window).rows();
    prov.projection_cycles = (prov.projection_rows - 1) / prov.source_rows;
    prov.source_truncated = prov.source_rows > prov.projection_rows;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Config file

namespace detail {

inline DateWindow window_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_string()) {
    fail(ErrorCode::config, "window '" + name + "' must be [\"YYYY-MM-DD\", \"YYYY-MM-DD\"]");
  }
  try {
    return DateWindow{Date::parse(j[0].get<std::string>()), Date::parse(j[1].get<std::string>())};
  } catch (const Error& e) {
    fail(ErrorCode::config, "window '" + name + "': " + e.what());
  }
}

inline nlohmann::ordered_json window_to_json(const DateWindow& w) {
  return nlohmann::ordered_json::array({w.start.iso(), w.end.iso()});
}

}  // namespace detail

/// Parses a scenario config document. Relative `provider.cache_dir` resolves
/// against `base_dir`.
inline ScenarioConfig parse_scenario_config(const nlohmann::json& doc,
                                            const std::filesystem::path& base_dir = {}) {
  using nlohmann::json;
  if (!doc.is_object()) fail(ErrorCode::config, "config must be a JSON object");
  ScenarioConfig c;
  try {
    c.name = doc.value("name", "");
    for (const auto& u : doc.at("universe")) {
      c.universe.push_back({u.at("symbol").get<std::string>(),
                            parse_instrument_kind(u.at("kind").get<std::string>())});
    }
    if (doc.contains("correlation_symbols")) {
      c.correlation_symbols = doc["correlation_symbols"].get<std::vector<std::string>>();
    }
    for (const auto& s : doc.at("feature_specs")) c.feature_specs.push_back(spec_from_json(s));
    const auto& w = doc.at("windows");
    c.train_window = detail::window_from_json(w.at("train"), "train");
    c.test_window = detail::window_from_json(w.at("test"), "test");
    c.correlation_before = detail::window_from_json(w.at("correlation_before"), "correlation_before");
    c.correlation_after = detail::window_from_json(w.at("correlation_after"), "correlation_after");
    c.source_window = detail::window_from_json(w.at("source"), "source");
    c.projection_window = detail::window_from_json(w.at("projection"), "projection");
    c.projection_mode = parse_projection_mode(doc.value("projection_mode", "date_shifted"));
    if (doc.contains("provider")) {
      const auto& p = doc["provider"];
      c.provider.base_url = p.value("base_url", c.provider.base_url);
      c.provider.api_key = p.value("api_key", "");
      c.provider.rate_limit = p.value("rate_limit", c.provider.rate_limit);
      c.provider.cache_dir = p.value("cache_dir", c.provider.cache_dir.string());
      if (p.contains("routes")) {
        for (const auto& [symbol, r] : p["routes"].items()) {
          ProviderRoute route;
          for (const auto& [k, v] : r.at("params").items()) {
            route.params.emplace_back(k, v.get<std::string>());
          }
          route.close_only = r.value("close_only", false);
          c.provider.routes[symbol] = std::move(route);
        }
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("config: ") + e.what());
  }
  if (c.provider.cache_dir.is_relative() && !base_dir.empty()) {
    c.provider.cache_dir = base_dir / c.provider.cache_dir;
  }
  c.provider.validate();
  c.validate();
  return c;
}

inline nlohmann::json parse_config_document(std::string_view text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
  }
}

inline ScenarioConfig parse_scenario_config_text(std::string_view text,
                                                 const std::filesystem::path& base_dir = {}) {
  return parse_scenario_config(parse_config_document(text), base_dir);
}

/// sha256 of the canonical form (sorted keys, compact) of a config document.
inline std::string config_digest(const nlohmann::json& doc) { return sha256_hex(doc.dump()); }

inline std::string config_text_digest(std::string_view text) {
  return config_digest(parse_config_document(text));
}

// ---------------------------------------------------------------------------
// Report JSON

inline nlohmann::ordered_json report_to_json(const ScenarioReport& r) {
  using oj = nlohmann::ordered_json;
  oj j;
  j["targets"] = oj::array();
  for (const auto& t : r.targets) {
    oj o;
    o["symbol"] = t.symbol();
    o["model"] = model_to_json(t.model);
    o["test_metrics"] = metrics_to_json(t.test_metrics);
    o["divergence_metrics"] = metrics_to_json(t.divergence_metrics);
    oj dates = oj::array();
    for (const auto& d : t.projection_dates) dates.push_back(d.iso());
    o["dates"] = std::move(dates);
    o["realized"] = t.realized;
    o["counterfactual"] = t.counterfactual;
    j["targets"].push_back(std::move(o));
  }
  j["correlation_before"] = correlation_to_json(r.correlation_before);
  j["correlation_after"] = correlation_to_json(r.correlation_after);
  const auto& p = r.provenance;
  oj prov;
  prov["config_digest"] = p.config_digest;
  prov["data_digests"] = oj::object();
  for (const auto& [s, d] : p.data_digests) prov["data_digests"][s] = d;
  prov["projection_mode"] = to_string(p.projection_mode);
  prov["source_rows"] = p.source_rows;
  prov["projection_rows"] = p.projection_rows;
  prov["projection_cycles"] = p.projection_cycles;
  prov["source_truncated"] = p.source_truncated;
  j["provenance"] = std::move(prov);
  return j;
}

inline ScenarioReport report_from_json(const nlohmann::json& j) {
  ScenarioReport r;
  try {
    for (const auto& o : j.at("targets")) {
      TargetOutcome t;
      t.model = model_from_json(o.at("model"));
      t.spec = t.model.spec;
      t.test_metrics = metrics_from_json(o.at("test_metrics"));
      t.divergence_metrics = metrics_from_json(o.at("divergence_metrics"));
      for (const auto& d : o.at("dates")) t.projection_dates.push_back(Date::parse(d.get<std::string>()));
      t.realized = o.at("realized").get<std::vector<double>>();
      t.counterfactual = o.at("counterfactual").get<std::vector<double>>();
      if (t.realized.size() != t.projection_dates.size() ||
          t.counterfactual.size() != t.projection_dates.size()) {
        fail(ErrorCode::invariant, "report target " + t.symbol() +
                                       ": counterfactual/realized/date lengths differ");
      }
      r.targets.push_back(std::move(t));
    }
    r.correlation_before = correlation_from_json(j.at("correlation_before"));
    r.correlation_after = correlation_from_json(j.at("correlation_after"));
    const auto& p = j.at("provenance");
    r.provenance.config_digest = p.at("config_digest").get<std::string>();
    r.provenance.data_digests = p.at("data_digests").get<std::map<std::string, std::string>>();
    r.provenance.projection_mode = parse_projection_mode(p.at("projection_mode").get<std::string>());
    r.provenance.source_rows = p.at("source_rows").get<std::size_t>();
    r.provenance.projection_rows = p.at("projection_rows").get<std::size_t>();
    r.provenance.projection_cycles = p.at("projection_cycles").get<std::size_t>();
    r.provenance.source_truncated = p.at("source_truncated").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::malformed, std::string("scenario report: ") + e.what());
  }
  if (r.provenance.config_digest.empty()) fail(ErrorCode::invariant, "report lacks a config digest");
  return r;
}

}  // namespace eventlens
