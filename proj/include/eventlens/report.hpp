#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "eventlens/digest.hpp"
#include "eventlens/error.hpp"
#include "eventlens/format.hpp"
#include "eventlens/ingest.hpp"
#include "eventlens/scenario.hpp"
#include "eventlens/stats.hpp"

namespace eventlens {

enum class OutputFormat { csv, json };

inline std::string_view to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

inline OutputFormat parse_output_format(std::string_view text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  fail(ErrorCode::usage, "unknown format '" + std::string(text) + "' (expected csv or json)");
}

struct BundleEntry {
  std::string file;
  std::size_t bytes = 0;
  std::string digest;

  bool operator==(const BundleEntry&) const = default;
};

struct ReportBundle {
  std::filesystem::path dir;
  std::string config_digest;
  std::vector<BundleEntry> files;
};

inline constexpr std::string_view kManifestName = "manifest.json";

// ---------------------------------------------------------------------------
// Table renderers. CSV and JSON renderings of one table carry the same values.

inline std::string metrics_table_csv(const ScenarioReport& r) {
  std::string out = "target,window,mse,rmse,mae,mape,n\n";
  for (const auto& t : r.targets) {
    for (const auto& [window, m] :
         {std::pair{"test", &t.test_metrics}, std::pair{"projection", &t.divergence_metrics}}) {
      out += t.symbol() + "," + window + "," + format_decimal(m->mse) + "," +
             format_decimal(m->rmse) + "," + format_decimal(m->mae) + "," +
             format_decimal(m->mape) + "," + std::to_string(m->n) + "\n";
    }
  }
  return out;
}

inline nlohmann::ordered_json metrics_table_json(const ScenarioReport& r) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& t : r.targets) {
    for (const auto& [window, m] :
         {std::pair{"test", &t.test_metrics}, std::pair{"projection", &t.divergence_metrics}}) {
      nlohmann::ordered_json row;
      row["target"] = t.symbol();
      row["window"] = window;
      const auto values = metrics_to_json(*m);
      for (const auto& [k, v] : values.items()) row[k] = v;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::string counterfactual_csv(const TargetOutcome& t) {
  std::string out = "date,realized,counterfactual\n";
  for (std::size_t i = 0; i < t.projection_dates.size(); ++i) {
    out += t.projection_dates[i].iso() + "," + format_decimal(t.realized[i]) + "," +
           format_decimal(t.counterfactual[i]) + "\n";
  }
  return out;
}

inline nlohmann::ordered_json counterfactual_json(const TargetOutcome& t) {
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < t.projection_dates.size(); ++i) {
    nlohmann::ordered_json row;
    row["date"] = t.projection_dates[i].iso();
    row["realized"] = t.realized[i];
    row["counterfactual"] = t.counterfactual[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string json_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

/// Writes the bundle under `out_dir`. The manifest goes last and atomically,
/// so a failed emission never leaves a manifest behind.
inline ReportBundle emit(const ScenarioReport& report, const std::filesystem::path& out_dir,
                         const std::set<OutputFormat>& formats) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create '" + out_dir.string() + "': " + ec.message());
  std::filesystem::remove(out_dir / kManifestName, ec);

  ReportBundle bundle{out_dir, report.provenance.config_digest, {}};
  auto put = [&](const std::string& name, const std::string& data) {
    detail::write_file_atomic(out_dir / name, data);
    bundle.files.push_back({name, data.size(), sha256_hex(data)});
  };

  for (auto fmt : formats) {
    const std::string ext = "." + std::string(to_string(fmt));
    const bool csv = fmt == OutputFormat::csv;
    put("metrics" + ext, csv ? metrics_table_csv(report) : json_text(metrics_table_json(report)));
    put("corr_before" + ext, csv ? correlation_to_csv(report.correlation_before)
                                 : json_text(correlation_to_json(report.correlation_before)));
    put("corr_after" + ext, csv ? correlation_to_csv(report.correlation_after)
                                : json_text(correlation_to_json(report.correlation_after)));
    for (const auto& t : report.targets) {
      put("counterfactual_" + t.symbol() + ext,
          csv ? counterfactual_csv(t) : json_text(counterfactual_json(t)));
    }
  }

  nlohmann::ordered_json manifest;
  manifest["config_digest"] = bundle.config_digest;
  manifest["files"] = nlohmann::ordered_json::array();
  for (const auto& f : bundle.files) {
    manifest["files"].push_back({{"file", f.file}, {"bytes", f.bytes}, {"digest", f.digest}});
  }
  detail::write_file_atomic(out_dir / kManifestName, json_text(manifest));
  return bundle;
}

/// Re-reads a bundle's manifest and checks every listed file against its
/// recorded size and digest. Returns the mismatches (empty when intact).
inline std::vector<std::string> verify_bundle(const std::filesystem::path& dir) {
  const auto path = dir / kManifestName;
  if (!std::filesystem::exists(path)) return {"missing " + std::string(kManifestName)};
  std::vector<std::string> problems;
  auto manifest = nlohmann::json::parse(detail::read_file(path));
  for (const auto& f : manifest.at("files")) {
    const auto name = f.at("file").get<std::string>();
    if (!std::filesystem::exists(dir / name)) {
      problems.push_back(name + ": missing");
      continue;
    }
    const auto data = detail::read_file(dir / name);
    if (data.size() != f.at("bytes").get<std::size_t>()) problems.push_back(name + ": size differs");
    if (sha256_hex(data) != f.at("digest").get<std::string>()) problems.push_back(name + ": digest differs");
  }
  return problems;
}

}  // namespace eventlens
