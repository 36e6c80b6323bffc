#pragma once

// Command surface: fetch | correlate | fit | project | run | report.
// Exit codes: 0 success, 1 data/model error, 2 usage or config error. Every
// failure is one line on the error stream:
//   eventlens: error[<code>]: <message>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eventlens/error.hpp"
#include "eventlens/ingest.hpp"
#include "eventlens/report.hpp"
#include "eventlens/scenario.hpp"

namespace eventlens::cli {

struct CliEnvironment {
  Transport& transport;
  Clock& clock;
};

struct Invocation {
  std::string subcommand;
  std::string config_path;
  std::string input_path;
  std::string out_dir;
  std::string mode;
  std::string formats = "csv,json";
  std::string symbol;
  std::string train_window;
  std::string test_window;
  std::string source_window;
  std::string projection_window;
  bool offline = false;
  bool refresh = false;
};

namespace detail {

inline std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

inline int report_error(std::ostream& err, std::string_view code, const std::string& message,
                        int status) {
  err << "eventlens: error[" << code << "]: " << one_line(message) << "\n";
  return status;
}

inline std::set<OutputFormat> parse_formats(const std::string& text) {
  std::set<OutputFormat> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(parse_output_format(item));
  }
  return out;
}

// "START:END" -> ["START", "END"]
inline nlohmann::json window_override(const std::string& text, const char* flag) {
  auto colon = text.find(':');
  if (colon == std::string::npos) {
    fail(ErrorCode::usage, std::string(flag) + " expects START:END, got '" + text + "'");
  }
  auto a = text.substr(0, colon);
  auto b = text.substr(colon + 1);
  if (!Date::try_parse(a) || !Date::try_parse(b)) {
    fail(ErrorCode::usage, std::string(flag) + " dates must be YYYY-MM-DD");
  }
  return nlohmann::json::array({a, b});
}

struct LoadedConfig {
  ScenarioConfig config;
  std::string digest;
};

// Overrides are applied to the document before parsing so the digest
// describes the configuration actually run.
inline LoadedConfig load_config(const Invocation& inv) {
  if (inv.config_path.empty()) fail(ErrorCode::usage, inv.subcommand + " requires --config PATH");
  const std::filesystem::path path = inv.config_path;
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::usage, "config file '" + inv.config_path + "' does not exist");
  }
  auto doc = parse_config_document(eventlens::detail::read_file(path));
  if (!doc.is_object()) fail(ErrorCode::config, "config must be a JSON object");
  if (!inv.mode.empty()) {
    parse_projection_mode(inv.mode);
    doc["projection_mode"] = inv.mode;
  }
  if (!inv.train_window.empty()) doc["windows"]["train"] = window_override(inv.train_window, "--train-window");
  if (!inv.test_window.empty()) doc["windows"]["test"] = window_override(inv.test_window, "--test-window");
  if (!inv.source_window.empty()) doc["windows"]["source"] = window_override(inv.source_window, "--source-window");
  if (!inv.projection_window.empty()) {
    doc["windows"]["projection"] = window_override(inv.projection_window, "--projection-window");
  }
  if (!inv.symbol.empty() && doc.contains("feature_specs")) {
    auto kept = nlohmann::json::array();
    for (const auto& s : doc["feature_specs"]) {
      const auto target = s.value("target", "");
      if (target.rfind(inv.symbol + ".", 0) == 0) kept.push_back(s);
    }
    if (kept.empty()) fail(ErrorCode::usage, "--symbol " + inv.symbol + " is not a configured target");
    doc["feature_specs"] = std::move(kept);
  }
  LoadedConfig out{parse_scenario_config(doc, path.parent_path()), config_digest(doc)};
  return out;
}

inline std::vector<RawSeries> load_data(const ScenarioConfig& config, const Invocation& inv,
                                        CliEnvironment& env) {
  RateLimiter limiter(config.provider.rate_limit, env.clock);
  QuoteClient client(config.provider, env.transport, limiter);
  std::vector<RawSeries> out;
  for (const auto& u : config.universe) {
    out.push_back(client.fetch_daily(u, {inv.offline, inv.refresh}));
  }
  return out;
}

inline void write_output(const Invocation& inv, std::ostream& out, const std::string& name,
                         const std::string& data) {
  if (inv.out_dir.empty()) {
    out << data;
    return;
  }
  eventlens::detail::write_file_atomic(std::filesystem::path(inv.out_dir) / name, data);
}

inline int cmd_fetch(const Invocation& inv, std::ostream& out, CliEnvironment& env) {
  auto [config, digest] = load_config(inv);
  auto data = load_data(config, inv, env);
  for (const auto& s : data) {
    out << s.instrument.symbol << " " << s.bars.size() << " bars";
    if (!s.bars.empty()) out << " " << s.bars.front().date.iso() << ".." << s.bars.back().date.iso();
    out << "\n";
  }
  return 0;
}

inline int cmd_correlate(const Invocation& inv, std::ostream& out, CliEnvironment& env) {
  auto [config, digest] = load_config(inv);
  auto data = load_data(config, inv, env);
  const auto panel = align(data, {BarField::close});
  std::vector<ColumnKey> keys;
  for (const auto& s : config.correlation_set()) keys.push_back({s, BarField::close});
  const auto formats = parse_formats(inv.formats);
  for (const auto& [name, window] : {std::pair{"corr_before", config.correlation_before},
                                     std::pair{"corr_after", config.correlation_after}}) {
    const auto m = correlation_matrix(slice(panel, window), keys);
    if (inv.out_dir.empty()) {
      out << "# " << name << " " << window.str() << "\n" << correlation_to_csv(m);
      continue;
    }
    for (auto fmt : formats) {
      if (fmt == OutputFormat::csv) {
        write_output(inv, out, std::string(name) + ".csv", correlation_to_csv(m));
        write_output(inv, out, std::string(name) + "_long.csv", correlation_to_long_csv(m));
      } else {
        write_output(inv, out, std::string(name) + ".json", json_text(correlation_to_json(m)));
      }
    }
  }
  return 0;
}

inline int cmd_fit(const Invocation& inv, std::ostream& out, CliEnvironment& env) {
  auto [config, digest] = load_config(inv);
  auto data = load_data(config, inv, env);
  const auto panel = align(data, kAllFields);
  auto models = nlohmann::ordered_json::array();
  for (const auto& spec : config.feature_specs) {
    try {
      const auto model = fit_ols(slice(panel, config.train_window), spec);
      const auto test = slice(panel, config.test_window);
      nlohmann::ordered_json j;
      j["symbol"] = spec.target.symbol;
      j["model"] = model_to_json(model);
      j["test_metrics"] = metrics_to_json(score(test.column(spec.target), predict(model, test)));
      models.push_back(std::move(j));
    } catch (const Error& e) {
      throw Error(e.code(), "target " + spec.target.symbol + ": " + e.what());
    }
  }
  write_output(inv, out, "models.json", json_text(models));
  return 0;
}

inline int cmd_project(const Invocation& inv, std::ostream& out, CliEnvironment& env) {
  auto [config, digest] = load_config(inv);
  auto data = load_data(config, inv, env);
  const auto report = run_scenario(config, data, digest);
  write_output(inv, out, "report.json", json_text(report_to_json(report)));
  return 0;
}

inline int cmd_run(const Invocation& inv, std::ostream& out, CliEnvironment& env) {
  auto [config, digest] = load_config(inv);
  auto data = load_data(config, inv, env);
  const auto report = run_scenario(config, data, digest);
  const auto dir = inv.out_dir.empty() ? std::string("out") : inv.out_dir;
  const auto bundle = emit(report, dir, parse_formats(inv.formats));
  out << "wrote " << bundle.files.size() << " files and " << kManifestName << " to " << dir << "\n";
  return 0;
}

inline int cmd_report(const Invocation& inv, std::ostream& out) {
  if (inv.input_path.empty()) fail(ErrorCode::usage, "report requires --input REPORT.json");
  if (inv.out_dir.empty()) fail(ErrorCode::usage, "report requires --out DIR");
  if (!std::filesystem::exists(inv.input_path)) {
    fail(ErrorCode::usage, "report file '" + inv.input_path + "' does not exist");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(eventlens::detail::read_file(inv.input_path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::malformed, std::string("report is not JSON: ") + e.what());
  }
  const auto bundle = emit(report_from_json(doc), inv.out_dir, parse_formats(inv.formats));
  out << "wrote " << bundle.files.size() << " files and " << kManifestName << " to "
      << inv.out_dir << "\n";
  return 0;
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                   CliEnvironment env) {
  CLI::App app{"Event-impact analysis on daily market data", "eventlens"};
  app.require_subcommand(1, 1);
  Invocation inv;

  auto add_common = [&](CLI::App* sub, bool data) {
    sub->add_option("--config", inv.config_path, "Scenario config (JSON)");
    sub->add_option("--out", inv.out_dir, "Output directory");
    if (data) {
      sub->add_flag("--offline", inv.offline, "Use cached data only; never touch the network");
      sub->add_option("--symbol", inv.symbol, "Restrict to one target symbol");
      sub->add_option("--train-window", inv.train_window, "Override train window START:END");
      sub->add_option("--test-window", inv.test_window, "Override test window START:END");
      sub->add_option("--source-window", inv.source_window, "Override source window START:END");
      sub->add_option("--projection-window", inv.projection_window,
                      "Override projection window START:END");
    }
  };

  auto* fetch = app.add_subcommand("fetch", "Populate the series cache");
  add_common(fetch, true);
  fetch->add_flag("--refresh", inv.refresh, "Refetch even when cached");
  auto* correlate = app.add_subcommand("correlate", "Correlation matrices before/after the event");
  add_common(correlate, true);
  correlate->add_option("--format", inv.formats, "csv,json");
  auto* fit = app.add_subcommand("fit", "Fit each target on the train window, score on test");
  add_common(fit, true);
  auto* project = app.add_subcommand("project", "Full scenario; write report.json");
  add_common(project, true);
  project->add_option("--mode", inv.mode, "date_shifted|oracle_features");
  auto* run = app.add_subcommand("run", "Full scenario; emit the report bundle");
  add_common(run, true);
  run->add_option("--mode", inv.mode, "date_shifted|oracle_features");
  run->add_option("--format", inv.formats, "csv,json");
  auto* report = app.add_subcommand("report", "Emit a bundle from a saved report.json");
  report->add_option("--input", inv.input_path, "report.json from `project`");
  report->add_option("--out", inv.out_dir, "Output directory");
  report->add_option("--format", inv.formats, "csv,json");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return detail::report_error(err, "usage", e.what(), 2);
  }

  for (auto* sub : app.get_subcommands()) inv.subcommand = sub->get_name();

  try {
    if (inv.subcommand == "fetch" && inv.offline) {
      fail(ErrorCode::usage, "fetch cannot be combined with --offline");
    }
    if (!inv.formats.empty()) detail::parse_formats(inv.formats);
    if (inv.subcommand == "fetch") return detail::cmd_fetch(inv, out, env);
    if (inv.subcommand == "correlate") return detail::cmd_correlate(inv, out, env);
    if (inv.subcommand == "fit") return detail::cmd_fit(inv, out, env);
    if (inv.subcommand == "project") return detail::cmd_project(inv, out, env);
    if (inv.subcommand == "run") return detail::cmd_run(inv, out, env);
    return detail::cmd_report(inv, out);
  } catch (const Error& e) {
    const bool usage = e.code() == ErrorCode::usage || e.code() == ErrorCode::config;
    return detail::report_error(err, to_string(e.code()), e.what(), usage ? 2 : 1);
  } catch (const std::exception& e) {
    return detail::report_error(err, "internal", e.what(), 1);
  }
}

}  // namespace eventlens::cli
