#pragma once

#include <cmath>
#include <nlohmann/json.hpp>
#include <span>
#include <string>

#include "eventlens/error.hpp"

namespace eventlens {

struct MetricsReport {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  /// Percent.
  double mape = 0.0;
  std::size_t n = 0;

  bool operator==(const MetricsReport&) const = default;
};

namespace detail {
inline void check_pair(std::span<const double> truth, std::span<const double> pred,
                       const char* what) {
  if (truth.size() != pred.size()) {
    fail(ErrorCode::length_mismatch, std::string(what) + ": lengths " +
                                         std::to_string(truth.size()) + " and " +
                                         std::to_string(pred.size()) + " differ");
  }
  if (truth.empty()) fail(ErrorCode::empty_input, std::string(what) + ": empty input");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!std::isfinite(truth[i]) || !std::isfinite(pred[i])) {
      fail(ErrorCode::invariant, std::string(what) + ": non-finite value at index " +
                                     std::to_string(i));
    }
  }
}
}  // namespace detail

inline double mse(std::span<const double> truth, std::span<const double> pred) {
  detail::check_pair(truth, pred, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = truth[i] - pred[i];
    s += e * e;
  }
  return s / static_cast<double>(truth.size());
}

inline double rmse(std::span<const double> truth, std::span<const double> pred) {
  return std::sqrt(mse(truth, pred));
}

inline double mae(std::span<const double> truth, std::span<const double> pred) {
  detail::check_pair(truth, pred, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - pred[i]);
  return s / static_cast<double>(truth.size());
}

/// Mean of per-point |e_i| / |true_i|, in percent. Any zero truth value is an
/// error rather than a skipped point.
inline double mape(std::span<const double> truth, std::span<const double> pred) {
  detail::check_pair(truth, pred, "mape");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0.0) {
      fail(ErrorCode::zero_denominator, "mape: true value at index " + std::to_string(i) +
                                            " is zero");
    }
    s += std::abs(truth[i] - pred[i]) / std::abs(truth[i]);
  }
  return s / static_cast<double>(truth.size()) * 100.0;
}

inline MetricsReport score(std::span<const double> truth, std::span<const double> pred) {
  MetricsReport r;
  r.mse = mse(truth, pred);
  r.rmse = std::sqrt(r.mse);
  r.mae = mae(truth, pred);
  r.mape = mape(truth, pred);
  r.n = truth.size();
  if (r.mae > r.rmse + 1e-12 * std::max(1.0, r.rmse)) {
    fail(ErrorCode::invariant, "score: mae exceeds rmse");
  }
  return r;
}

/// Fixed key order: mse, rmse, mae, mape, n.
inline nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["mse"] = m.mse;
  j["rmse"] = m.rmse;
  j["mae"] = m.mae;
  j["mape"] = m.mape;
  j["n"] = m.n;
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  return {j.at("mse").get<double>(), j.at("rmse").get<double>(), j.at("mae").get<double>(),
          j.at("mape").get<double>(), j.at("n").get<std::size_t>()};
}

}  // namespace eventlens
