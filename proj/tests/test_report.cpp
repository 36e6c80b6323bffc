#include <gtest/gtest.h>

#include <sstream>

#include "eventlens/report.hpp"
#include "fixture_scenario.hpp"
#include "test_support.hpp"

namespace el = eventlens;
namespace fs = std::filesystem;
using el::testing::code_of;
using el::testing::slurp;
using el::testing::TempDir;
using nlohmann::json;

namespace {

const el::ScenarioReport& noisy_report() {
  static const el::ScenarioReport report = [] {
    auto f = el::testing::load_fixture_scenario("synthetic_noisy");
    return el::run_scenario(f.config, f.data, f.digest());
  }();
  return report;
}

const std::set<el::OutputFormat> kBoth{el::OutputFormat::csv, el::OutputFormat::json};

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

double num(const std::string& s) {
  auto v = el::parse_decimal(s);
  EXPECT_TRUE(v.has_value()) << s;
  return v.value_or(0.0);
}

}  // namespace

TEST(Emit, NoFormatsWritesOnlyTheManifest) {
  TempDir dir;
  auto bundle = el::emit(noisy_report(), dir.path() / "b", {});
  EXPECT_TRUE(bundle.files.empty());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir.path() / "b")) names.push_back(e.path().filename());
  EXPECT_EQ(names, std::vector<std::string>{"manifest.json"});
  auto manifest = json::parse(slurp(dir.path() / "b/manifest.json"));
  EXPECT_EQ(manifest["config_digest"], noisy_report().provenance.config_digest);
  EXPECT_TRUE(manifest["files"].empty());
}

TEST(Emit, FileSetAndManifest) {
  TempDir dir;
  auto bundle = el::emit(noisy_report(), dir.path(), kBoth);
  EXPECT_EQ(bundle.files.size(), 2u * (3u + noisy_report().targets.size()));
  EXPECT_EQ(bundle.files.front().file, "metrics.csv");
  EXPECT_TRUE(el::verify_bundle(dir.path()).empty());
  for (const auto& f : bundle.files) {
    EXPECT_EQ(el::sha256_hex(slurp(dir.path() / f.file)), f.digest) << f.file;
  }
  auto manifest = json::parse(slurp(dir.path() / el::kManifestName));
  EXPECT_EQ(manifest["files"].size(), bundle.files.size());
  EXPECT_EQ(manifest["files"][0]["file"], "metrics.csv");
}

TEST(Emit, RepeatedEmissionIsByteIdentical) {
  TempDir a, b;
  el::emit(noisy_report(), a.path(), kBoth);
  el::emit(noisy_report(), b.path(), kBoth);
  el::emit(noisy_report(), b.path(), kBoth);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a.path())) {
    EXPECT_EQ(slurp(e.path()), slurp(b.path() / e.path().filename())) << e.path().filename();
    ++compared;
  }
  EXPECT_EQ(compared, 15u);
}

TEST(Emit, FailedWriteLeavesNoManifest) {
  TempDir dir;
  el::emit(noisy_report(), dir.path(), kBoth);
  ASSERT_TRUE(fs::exists(dir.path() / el::kManifestName));
  // A directory squatting on the temp name makes the write of that file fail.
  fs::create_directories(dir.path() / "corr_after.csv.tmp");
  EXPECT_EQ(code_of([&] { el::emit(noisy_report(), dir.path(), kBoth); }), el::ErrorCode::io);
  EXPECT_FALSE(fs::exists(dir.path() / el::kManifestName));
  EXPECT_FALSE(el::verify_bundle(dir.path()).empty());
}

TEST(VerifyBundle, DetectsTampering) {
  TempDir dir;
  el::emit(noisy_report(), dir.path(), {el::OutputFormat::csv});
  {
    std::ofstream out(dir.path() / "metrics.csv", std::ios::app);
    out << "x";
  }
  fs::remove(dir.path() / "corr_after.csv");
  auto problems = el::verify_bundle(dir.path());
  ASSERT_EQ(problems.size(), 3u);
  EXPECT_EQ(problems[0], "metrics.csv: size differs");
  EXPECT_EQ(problems[2], "corr_after.csv: missing");
}

TEST(Emit, CsvAndJsonCarryTheSameValues) {
  TempDir dir;
  el::emit(noisy_report(), dir.path(), kBoth);

  auto metrics_csv = csv_rows(slurp(dir.path() / "metrics.csv"));
  auto metrics_json = json::parse(slurp(dir.path() / "metrics.json"));
  ASSERT_EQ(metrics_csv.size(), metrics_json.size() + 1);
  EXPECT_EQ(metrics_csv[0], (std::vector<std::string>{"target", "window", "mse", "rmse", "mae", "mape", "n"}));
  for (std::size_t i = 0; i < metrics_json.size(); ++i) {
    const auto& row = metrics_csv[i + 1];
    const auto& obj = metrics_json[i];
    EXPECT_EQ(row[0], obj["target"]);
    EXPECT_EQ(row[1], obj["window"]);
    for (std::size_t c = 2; c < 6; ++c) EXPECT_EQ(num(row[c]), obj[metrics_csv[0][c]].get<double>());
    EXPECT_EQ(std::stoul(row[6]), obj["n"].get<std::size_t>());
  }

  for (const auto* name : {"corr_before", "corr_after"}) {
    auto rows = csv_rows(slurp(dir.path() / (std::string(name) + ".csv")));
    auto m = el::correlation_from_json(json::parse(slurp(dir.path() / (std::string(name) + ".json"))));
    ASSERT_EQ(rows.size(), m.size() + 1);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_EQ(rows[0][i + 1], m.labels[i].str());
      EXPECT_EQ(rows[i + 1][0], m.labels[i].str());
      for (std::size_t j = 0; j < m.size(); ++j) EXPECT_EQ(num(rows[i + 1][j + 1]), m(i, j));
    }
  }

  for (const auto& t : noisy_report().targets) {
    auto rows = csv_rows(slurp(dir.path() / ("counterfactual_" + t.symbol() + ".csv")));
    auto arr = json::parse(slurp(dir.path() / ("counterfactual_" + t.symbol() + ".json")));
    ASSERT_EQ(rows.size(), arr.size() + 1);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      EXPECT_EQ(rows[i + 1][0], arr[i]["date"]);
      EXPECT_EQ(num(rows[i + 1][1]), arr[i]["realized"].get<double>());
      EXPECT_EQ(num(rows[i + 1][2]), arr[i]["counterfactual"].get<double>());
      EXPECT_EQ(arr[i]["counterfactual"].get<double>(), t.counterfactual[i]);
    }
  }
}

TEST(Emit, MatchesCommittedGolden) {
  const auto golden = el::testing::fixture_dir() / "golden/synthetic_noisy";
  ASSERT_TRUE(fs::exists(golden / el::kManifestName));
  TempDir dir;
  el::emit(noisy_report(), dir.path(), kBoth);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(golden)) {
    EXPECT_EQ(slurp(dir.path() / e.path().filename()), slurp(e.path())) << e.path().filename();
    ++compared;
  }
  EXPECT_EQ(compared, 15u);
  EXPECT_TRUE(el::verify_bundle(golden).empty());
}

TEST(OutputFormat, Parse) {
  EXPECT_EQ(el::parse_output_format("csv"), el::OutputFormat::csv);
  EXPECT_EQ(el::parse_output_format("json"), el::OutputFormat::json);
  EXPECT_EQ(code_of([] { el::parse_output_format("xml"); }), el::ErrorCode::usage);
}
