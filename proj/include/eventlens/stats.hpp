#pragma once

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "eventlens/error.hpp"
#include "eventlens/format.hpp"
#include "eventlens/panel.hpp"

namespace eventlens {

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Sample covariance, (n - 1) denominator.
inline double sample_covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::length_mismatch, "covariance: length mismatch");
  if (x.size() < 2) fail(ErrorCode::too_short, "covariance: need at least 2 points");
  const double mx = mean(x);
  const double my = mean(y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / static_cast<double>(x.size() - 1);
}

namespace detail {
inline bool is_constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}
}  // namespace detail

/// Sample Pearson correlation. Two-pass centred sums; the clamp only absorbs
/// last-ulp overshoot.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    fail(ErrorCode::length_mismatch, "pearson: lengths " + std::to_string(x.size()) + " and " +
                                         std::to_string(y.size()) + " differ");
  }
  if (x.size() < 2) fail(ErrorCode::too_short, "pearson: need at least 2 points");
  if (detail::is_constant(x) || detail::is_constant(y)) {
    fail(ErrorCode::zero_variance, "pearson: input has zero variance");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::zero_variance, "pearson: input has zero variance");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

struct CorrelationMatrix {
  std::vector<ColumnKey> labels;
  /// Row-major, labels.size() squared.
  std::vector<double> values;

  std::size_t size() const { return labels.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values[i * size() + j]; }

  /// Empty when symmetric, unit-diagonal and bounded; otherwise the first
  /// violation found.
  std::string violation() const {
    const auto n = size();
    if (values.size() != n * n) return "value count does not match labels";
    for (std::size_t i = 0; i < n; ++i) {
      if ((*this)(i, i) != 1.0) return "diagonal entry " + std::to_string(i) + " is not 1";
      for (std::size_t j = 0; j < n; ++j) {
        const double v = (*this)(i, j);
        if (!std::isfinite(v) || v < -1.0 - 1e-12 || v > 1.0 + 1e-12) {
          return "entry out of [-1, 1] at " + labels[i].str() + "/" + labels[j].str();
        }
        if (v != (*this)(j, i)) return "asymmetric at " + labels[i].str() + "/" + labels[j].str();
      }
    }
    return {};
  }

  bool operator==(const CorrelationMatrix&) const = default;
};

inline CorrelationMatrix correlation_matrix(const AlignedPanel& panel,
                                            std::span<const ColumnKey> keys) {
  if (keys.empty()) fail(ErrorCode::empty_input, "correlation_matrix: no columns requested");
  std::vector<std::span<const double>> cols;
  for (const auto& k : keys) cols.push_back(panel.column(k));
  if (panel.rows() < 2) fail(ErrorCode::too_short, "correlation_matrix: need at least 2 rows");

  const auto n = keys.size();
  CorrelationMatrix m{{keys.begin(), keys.end()}, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (detail::is_constant(cols[i])) {
      fail(ErrorCode::zero_variance, "correlation_matrix: column " + keys[i].str() +
                                         " has zero variance");
    }
    m.values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double r = 0.0;
      try {
        r = pearson(cols[i], cols[j]);
      } catch (const Error& e) {
        throw Error(e.code(), "correlation " + keys[i].str() + " vs " + keys[j].str() + ": " +
                                  e.what());
      }
      m.values[i * n + j] = r;
      m.values[j * n + i] = r;
    }
  }
  return m;
}

/// Square table; first header cell is `label`.
inline std::string correlation_to_csv(const CorrelationMatrix& m) {
  std::string out = "label";
  for (const auto& l : m.labels) out += "," + l.str();
  out += "\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += m.labels[i].str();
    for (std::size_t j = 0; j < m.size(); ++j) out += "," + format_decimal(m(i, j));
    out += "\n";
  }
  return out;
}

/// Long form `label_i,label_j,r` for heatmap tools.
inline std::string correlation_to_long_csv(const CorrelationMatrix& m) {
  std::string out = "label_i,label_j,r\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      out += m.labels[i].str() + "," + m.labels[j].str() + "," + format_decimal(m(i, j)) + "\n";
    }
  }
  return out;
}

inline nlohmann::ordered_json correlation_to_json(const CorrelationMatrix& m) {
  nlohmann::ordered_json j;
  j["labels"] = nlohmann::ordered_json::array();
  for (const auto& l : m.labels) j["labels"].push_back(l.str());
  j["values"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < m.size(); ++k) row.push_back(m(i, k));
    j["values"].push_back(std::move(row));
  }
  return j;
}

inline CorrelationMatrix correlation_from_json(const nlohmann::json& j) {
  CorrelationMatrix m;
  for (const auto& l : j.at("labels")) m.labels.push_back(ColumnKey::parse(l.get<std::string>()));
  for (const auto& row : j.at("values")) {
    for (const auto& v : row) m.values.push_back(v.get<double>());
  }
  if (auto why = m.violation(); !why.empty()) fail(ErrorCode::invariant, "correlation matrix: " + why);
  return m;
}

}  // namespace eventlens
