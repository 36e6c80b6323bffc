// Acceptance checks. One line per criterion:
//   PASS|FAIL|SKIP  <id>  <summary>  (<detail>, <elapsed> ms)
// Exit status is nonzero when any blocking criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "eventlens/http_transport.hpp"
#include "eventlens/metrics.hpp"
#include "eventlens/regress.hpp"
#include "eventlens/report.hpp"
#include "eventlens/scenario.hpp"
#include "eventlens/stats.hpp"
#include "fixture_scenario.hpp"
#include "test_support.hpp"

namespace el = eventlens;
namespace fs = std::filesystem;
using Vec = std::vector<double>;

namespace {

// Tolerances.
constexpr double kPublishedPairTol = 1e-3;
constexpr double kOlsRelTol = 1e-9;
constexpr double kOrthogonalityTol = 1e-8;
constexpr double kMetricsTol = 1e-9;
constexpr double kCorrelationTol = 1e-12;
constexpr double kExactRecoveryTol = 1e-6;
constexpr double kNoisyRecoverySe = 3.0;

enum class Status { pass, fail, skip };

struct Result {
  Status status;
  std::string detail;
};

// Collects the first few failures of a criterion.
struct Checker {
  int failures = 0;
  std::ostringstream first;

  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures++ < 3) first << (failures > 1 ? "; " : "") << what;
  }
  Result result(const std::string& ok_detail) const {
    if (failures == 0) return {Status::pass, ok_detail};
    return {Status::fail, std::to_string(failures) + " failures: " + first.str()};
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

Result published_pair_consistency() {
  Checker c;
  // rows: mse, rmse as published
  const std::vector<std::tuple<std::string, double, double>> rows = {
      {"WTI", 0.39943, 0.632008}, {"Gold", 0.016860, 0.12984}};
  for (const auto& [name, mse, rmse] : rows) {
    c.expect(std::abs(std::sqrt(mse) - rmse) <= kPublishedPairTol, name + " sqrt(mse) vs rmse");
    // Through the library: a single error of size rmse must give mse back.
    const auto r = el::score(Vec{1000.0}, Vec{1000.0 + rmse});
    c.expect(std::abs(r.mse - mse) <= kPublishedPairTol, name + " score().mse " + fmt(r.mse));
    c.expect(r.rmse == std::sqrt(r.mse), name + " rmse != sqrt(mse)");
  }
  const double ndaq_gap = std::abs(std::sqrt(0.40524) - 0.03114);
  return c.result("WTI |sqrt(0.39943)-0.632008|=" + fmt(std::abs(std::sqrt(0.39943) - 0.632008)) +
                  ", Gold |sqrt(0.016860)-0.12984|=" + fmt(std::abs(std::sqrt(0.016860) - 0.12984)) +
                  "; NDAQ row excluded, gap " + fmt(ndaq_gap));
}

el::AlignedPanel panel_from(const std::vector<Vec>& x, const Vec& y, el::FeatureSpec& spec) {
  std::vector<el::Date> dates;
  for (std::size_t i = 0; i < y.size(); ++i) dates.push_back(el::Date(2020, 1, 1) + static_cast<int>(i));
  el::AlignedPanel::Columns cols;
  spec = {{"Y", el::BarField::close}, {}, true};
  for (std::size_t j = 0; j < x.front().size(); ++j) {
    Vec v(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) v[i] = x[i][j];
    el::ColumnKey key{"F" + std::to_string(j), el::BarField::open};
    spec.features.push_back(key);
    cols[key] = std::move(v);
  }
  cols[spec.target] = y;
  return el::AlignedPanel(std::move(dates), std::move(cols));
}

Result ols_oracle() {
  Checker c;
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> feats(1, 8);
  double worst_rel = 0.0, worst_orth = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = feats(rng);
    std::uniform_int_distribution<std::size_t> rows_dist(p + 5, 50);
    const std::size_t n = rows_dist(rng);
    std::vector<Vec> x(n, Vec(p));
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = g(rng);
      for (std::size_t j = 0; j < p; ++j) {
        x[i][j] = 2.0 + 3.0 * g(rng);
        y[i] += (static_cast<double>(j) - 2.5) * x[i][j];
      }
    }
    el::FeatureSpec spec;
    const auto panel = panel_from(x, y, spec);
    const auto model = el::fit_ols(panel, spec);
    const auto design = el::testing::design_rows(panel, spec.features, true);
    const auto oracle = el::testing::normal_equations_solve(design, y);
    double wmax = 0.0, diff = 0.0;
    for (std::size_t j = 0; j < oracle.size(); ++j) {
      wmax = std::max(wmax, std::abs(oracle[j]));
      diff = std::max(diff, std::abs(model.weights[j] - oracle[j]));
    }
    const double rel = diff / std::max(1.0, wmax);
    worst_rel = std::max(worst_rel, rel);
    c.expect(rel <= kOlsRelTol, "trial " + std::to_string(trial) + " rel " + fmt(rel));

    double xmax = 0.0, ymax = 0.0;
    for (const auto& r : design) for (double v : r) xmax = std::max(xmax, std::abs(v));
    for (double v : y) ymax = std::max(ymax, std::abs(v));
    const double scale = static_cast<double>(n) * xmax * ymax;
    for (std::size_t j = 0; j < design.front().size(); ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double pred = 0.0;
        for (std::size_t k = 0; k < design.front().size(); ++k) pred += design[i][k] * model.weights[k];
        dot += design[i][j] * (y[i] - pred);
      }
      worst_orth = std::max(worst_orth, std::abs(dot) / scale);
      c.expect(std::abs(dot) <= kOrthogonalityTol * scale, "trial " + std::to_string(trial) + " orthogonality");
    }
  }
  return c.result("200 instances, worst rel " + fmt(worst_rel) + ", worst |X^T r|/scale " + fmt(worst_orth));
}

Result metrics_properties() {
  Checker c;
  const auto hand = el::score(Vec{1, 2, 3}, Vec{1, 2, 4});
  c.expect(std::abs(hand.mse - 1.0 / 3.0) <= kMetricsTol, "hand mse");
  c.expect(std::abs(hand.rmse - 0.5773502691896258) <= kMetricsTol, "hand rmse");
  c.expect(std::abs(hand.mae - 1.0 / 3.0) <= kMetricsTol, "hand mae");
  c.expect(std::abs(hand.mape - 100.0 / 9.0) <= kMetricsTol, "hand mape");

  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> len(1, 100);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = len(rng);
    Vec t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = 50.0 + 20.0 * g(rng);
      p[i] = t[i] + 3.0 * g(rng);
    }
    const auto r = el::score(t, p);
    const double tol = kMetricsTol * std::max(1.0, r.rmse);
    c.expect(std::abs(r.rmse - std::sqrt(r.mse)) <= tol, "rmse = sqrt(mse)");
    c.expect(r.mae <= r.rmse + tol, "mae <= rmse");
    c.expect(r.rmse <= std::sqrt(static_cast<double>(n)) * r.mae + tol, "rmse <= sqrt(n) mae");
    const double k = 0.5 + 4.0 * std::abs(g(rng));
    Vec ts(n), ps(n);
    for (std::size_t i = 0; i < n; ++i) {
      ts[i] = k * t[i];
      ps[i] = k * p[i];
    }
    const auto s = el::score(ts, ps);
    c.expect(std::abs(s.mse - k * k * r.mse) <= kMetricsTol * std::max(1.0, k * k * r.mse), "mse scaling");
    c.expect(std::abs(s.rmse - k * r.rmse) <= kMetricsTol * std::max(1.0, k * r.rmse), "rmse scaling");
    c.expect(std::abs(s.mae - k * r.mae) <= kMetricsTol * std::max(1.0, k * r.mae), "mae scaling");
    c.expect(std::abs(s.mape - r.mape) <= kMetricsTol * std::max(1.0, r.mape), "mape scale invariance");
  }
  return c.result("hand vector {" + fmt(hand.mse) + ", " + fmt(hand.rmse) + ", " + fmt(hand.mae) + ", " +
                  fmt(hand.mape) + "%}, 1000 random vectors");
}

Result correlation_properties() {
  Checker c;
  const double half = el::pearson(Vec{1, 2, 3}, Vec{1, 3, 2});
  c.expect(std::abs(half - 0.5) <= kCorrelationTol, "hand r = 0.5, got " + fmt(half));

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> rows(3, 60), cols(1, 6);
  for (int trial = 0; trial < 300; ++trial) {
    auto panel = el::testing::random_panel(rng, rows(rng), cols(rng), 100.0);
    const auto keys = panel.keys();
    const auto m = el::correlation_matrix(panel, keys);
    for (std::size_t i = 0; i < m.size(); ++i) {
      c.expect(m(i, i) == 1.0, "unit diagonal");
      for (std::size_t j = 0; j < m.size(); ++j) {
        c.expect(m(i, j) == m(j, i), "symmetry");
        c.expect(std::abs(m(i, j)) <= 1.0, "|r| <= 1");
      }
    }
    if (keys.size() < 2) continue;
    // Positive affine maps of one column leave its correlations unchanged.
    const double a = 0.1 + std::abs(g(rng)) * 10.0, b = 1000.0 * g(rng);
    auto columns = panel.columns();
    for (auto& v : columns[keys[0]]) v = a * v + b;
    const auto m2 = el::correlation_matrix(el::AlignedPanel(panel.dates(), columns), keys);
    for (std::size_t j = 0; j < m.size(); ++j) {
      c.expect(std::abs(m2(0, j) - m(0, j)) <= kCorrelationTol, "affine invariance");
    }
  }
  return c.result("r(1,2,3;1,3,2)=" + fmt(half) + ", 300 random panels");
}

Result synthetic_recovery() {
  Checker c;
  double worst_exact = 0.0, worst_z = 0.0;
  std::string worst_z_at;
  {
    auto f = el::testing::load_fixture_scenario("synthetic_exact");
    const auto report = el::run_scenario(f.config, f.data, f.digest());
    for (const auto& t : report.targets) {
      const auto gen = f.expected["targets"][t.symbol()]["generating_weights"].get<Vec>();
      for (std::size_t j = 0; j < gen.size(); ++j) {
        const double err = std::abs(t.model.weights[j] - gen[j]) / std::max(1.0, std::abs(gen[j]));
        worst_exact = std::max(worst_exact, err);
        c.expect(err <= kExactRecoveryTol, "exact " + t.symbol() + " w" + std::to_string(j) + " " + fmt(err));
      }
    }
  }
  auto f = el::testing::load_fixture_scenario("synthetic_noisy");
  const auto report = el::run_scenario(f.config, f.data, f.digest());
  const auto train = el::slice(el::align(f.data, el::kAllFields), f.config.train_window);
  for (const auto& t : report.targets) {
    const auto& exp = f.expected["targets"][t.symbol()];
    const auto gen = exp["generating_weights"].get<Vec>();
    const double sigma = exp["sigma"].get<double>();
    const auto inv = el::testing::gram_inverse(el::testing::design_rows(train, t.spec.features, true));
    for (std::size_t j = 0; j < gen.size(); ++j) {
      const double z = std::abs(t.model.weights[j] - gen[j]) / (sigma * std::sqrt(inv[j][j]));
      if (z > worst_z) {
        worst_z = z;
        worst_z_at = t.symbol() + " w" + std::to_string(j);
      }
      c.expect(z <= kNoisyRecoverySe, "noisy " + t.symbol() + " w" + std::to_string(j) + " z=" + fmt(z));
    }
  }
  el::testing::TempDir dir("acceptance_golden");
  el::emit(report, dir.path(), {el::OutputFormat::csv, el::OutputFormat::json});
  const auto golden = el::testing::fixture_dir() / "golden/synthetic_noisy";
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(golden)) {
    ++files;
    const auto mine = dir.path() / e.path().filename();
    c.expect(fs::exists(mine) && el::testing::slurp(mine) == el::testing::slurp(e.path()),
             "golden mismatch " + e.path().filename().string());
  }
  c.expect(files > 1, "golden bundle missing");
  return c.result("exact worst rel " + fmt(worst_exact) + ", noisy worst " + fmt(worst_z) + " se at " +
                  worst_z_at + ", " + std::to_string(files) + " golden files identical");
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) out += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
  return out + "'";
}

Result determinism() {
  Checker c;
  el::testing::TempDir a("acceptance_det_a"), b("acceptance_det_b");
  const auto config = (el::testing::fixture_dir() / "synthetic_noisy/config.json").string();
  for (const auto* dir : {&a, &b}) {
    const auto cmd = shell_quote(EVENTLENS_CLI) + " run --offline --config " + shell_quote(config) +
                     " --out " + shell_quote(dir->path().string()) + " > /dev/null";
    const int rc = std::system(cmd.c_str());
    c.expect(rc == 0, "cli exit " + std::to_string(rc));
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a.path())) {
    ++files;
    const auto other = b.path() / e.path().filename();
    c.expect(fs::exists(other) && el::testing::slurp(other) == el::testing::slurp(e.path()),
             "differs " + e.path().filename().string());
  }
  c.expect(fs::exists(a.path() / el::kManifestName), "no manifest");
  c.expect(el::verify_bundle(a.path()).empty(), "manifest does not verify");
  return c.result(std::to_string(files) + " files byte-identical across two offline runs");
}

Result live_directions() {
  if (!std::getenv("EVENTLENS_API_KEY")) return {Status::skip, "EVENTLENS_API_KEY not set; network-gated"};
  Checker c;
  const fs::path config_path = fs::path(EVENTLENS_SOURCE_DIR) / "configs/paper.json";
  const auto doc = el::parse_config_document(el::testing::slurp(config_path));
  auto config = el::parse_scenario_config(doc, config_path.parent_path());
  config.projection_mode = el::ProjectionMode::oracle_features;
  el::testing::TempDir cache("acceptance_live_cache");
  config.provider.cache_dir = cache.path();
  el::HttpTransport transport;
  el::SystemClock clock;
  el::RateLimiter limiter(config.provider.rate_limit, clock);
  el::QuoteClient client(config.provider, transport, limiter);
  std::vector<el::RawSeries> data;
  for (const auto& u : config.universe) data.push_back(client.fetch_daily(u, {}));
  const auto report = el::run_scenario(config, data, el::config_digest(doc));

  const std::map<std::string, int> expected_sign = {{"USD_IDX", 1}, {"NDAQ", 1}, {"WTI", -1}, {"GOLD", -1}};
  std::ostringstream detail;
  for (const auto& t : report.targets) {
    double diff = 0.0;
    for (std::size_t i = 0; i < t.realized.size(); ++i) diff += t.counterfactual[i] - t.realized[i];
    diff /= static_cast<double>(t.realized.size());
    detail << t.symbol() << " " << fmt(diff) << " ";
    c.expect(diff * expected_sign.at(t.symbol()) > 0.0, t.symbol() + " mean(cf - realized) " + fmt(diff));
  }
  auto find = [](const el::CorrelationMatrix& m, const std::string& s) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m.labels[i].symbol == s) return i;
    }
    el::fail(el::ErrorCode::unknown_column, s + " not in correlation matrix");
  };
  const auto& before = report.correlation_before;
  const auto& after = report.correlation_after;
  const double rb = before(find(before, "RUBCNY"), find(before, "WTI"));
  const double ra = after(find(after, "RUBCNY"), find(after, "WTI"));
  detail << "RUBCNY/WTI " << fmt(rb) << " -> " << fmt(ra);
  c.expect(ra < rb, "RUBCNY/WTI correlation did not fall");
  return c.result(detail.str());
}

struct Criterion {
  std::string id;
  std::string summary;
  std::function<Result()> run;
  bool blocking = true;
  double budget_ms = 0.0;  // 0: no budget
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"published-metric-pairs", "reported WTI and Gold mse/rmse pairs satisfy rmse = sqrt(mse)", published_pair_consistency, true, 1000},
      {"ols-oracle", "fit_ols matches normal-equations oracle", ols_oracle, true, 5000},
      {"metrics-properties", "metric identities, bounds and scaling laws", metrics_properties, true, 1000},
      {"correlation-properties", "correlation symmetry, diagonal, bounds, affine invariance", correlation_properties, true, 1000},
      {"synthetic-recovery", "weight recovery on synthetic fixtures and golden bundle", synthetic_recovery, true, 10000},
      {"determinism", "two offline CLI runs give identical bundles", determinism, true, 10000},
      {"live-directions", "live data: counterfactual directions and RUBCNY/WTI shift", live_directions, false, 0},
  };

  int blocking_failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (r.status == Status::pass && c.budget_ms > 0 && ms > c.budget_ms) {
      r = {Status::fail, "over budget " + fmt(c.budget_ms) + " ms; " + r.detail};
    }
    const char* tag = r.status == Status::pass ? "PASS" : r.status == Status::fail ? "FAIL" : "SKIP";
    std::cout << tag << "  " << c.id << "  " << c.summary << "  (" << r.detail << ", " << fmt(ms) << " ms)"
              << (c.blocking ? "" : " [non-blocking]") << "\n";
    if (r.status == Status::fail && c.blocking) ++blocking_failures;
  }
  return blocking_failures == 0 ? 0 : 1;
}
