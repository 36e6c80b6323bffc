#pragma once

// Ordinary least squares for the linear hypothesis
//   close = w0 + sum_j w_j * feature_j + residual
// solved through a Householder QR of the column-equilibrated design matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "eventlens/error.hpp"
#include "eventlens/panel.hpp"

namespace eventlens {

struct FeatureSpec {
  ColumnKey target;
  std::vector<ColumnKey> features;
  bool include_intercept = true;

  void validate() const {
    if (target.field != BarField::close) {
      fail(ErrorCode::invalid_spec, "target " + target.str() + " must be a close field");
    }
    if (features.empty()) fail(ErrorCode::invalid_spec, "spec for " + target.str() + " has no features");
    std::set<ColumnKey> seen;
    for (const auto& f : features) {
      if (f == target) {
        fail(ErrorCode::invalid_spec, "target " + target.str() + " listed among its own features");
      }
      if (!seen.insert(f).second) fail(ErrorCode::invalid_spec, "duplicate feature " + f.str());
    }
  }

  std::size_t coefficient_count() const { return features.size() + (include_intercept ? 1 : 0); }

  bool operator==(const FeatureSpec&) const = default;
};

struct FitDiagnostics {
  double residual_sum_of_squares = 0.0;
  std::size_t training_rows = 0;
  /// 1-norm condition number of R from the equilibrated design.
  double condition_estimate = 0.0;
  /// Weights rescaled to z-scored features and target; filled only when
  /// requested in FitOptions.
  std::optional<std::vector<double>> standardized_weights;

  bool operator==(const FitDiagnostics&) const = default;
};

struct RegressionModel {
  FeatureSpec spec;
  /// Intercept first when spec.include_intercept, then one per feature.
  std::vector<double> weights;
  FitDiagnostics diagnostics;

  double intercept() const { return spec.include_intercept ? weights.front() : 0.0; }
  std::span<const double> slopes() const {
    return std::span<const double>(weights).subspan(spec.include_intercept ? 1 : 0);
  }

  bool operator==(const RegressionModel&) const = default;
};

struct FitOptions {
  /// L2 penalty on slope weights (raw units). Zero keeps plain OLS.
  double ridge = 0.0;
  bool standardize = false;
};

inline constexpr double kMaxConditionEstimate = 1e12;

namespace detail {

// Column-major dense matrix, only what the solver needs.
struct ColMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  ColMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[j * rows + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data[j * rows + i]; }
};

// Upper-triangular inverse by back substitution.
inline ColMatrix upper_inverse(const ColMatrix& r) {
  const auto p = r.cols;
  ColMatrix inv(p, p);
  for (std::size_t col = 0; col < p; ++col) {
    for (std::size_t ii = col + 1; ii-- > 0;) {
      double s = (ii == col) ? 1.0 : 0.0;
      for (std::size_t k = ii + 1; k <= col; ++k) s -= r(ii, k) * inv(k, col);
      inv(ii, col) = s / r(ii, ii);
    }
  }
  return inv;
}

inline double one_norm(const ColMatrix& m) {
  double best = 0.0;
  for (std::size_t j = 0; j < m.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) s += std::abs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

inline std::string join_names(const std::vector<std::string>& names, std::size_t upto) {
  std::string out = "{";
  for (std::size_t i = 0; i <= upto && i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out + "}";
}

inline std::string sci(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << v;
  return ss.str();
}

}  // namespace detail

inline RegressionModel fit_ols(const AlignedPanel& panel, const FeatureSpec& spec,
                               const FitOptions& options = {}) {
  spec.validate();
  if (!(options.ridge >= 0.0) || !std::isfinite(options.ridge)) {
    fail(ErrorCode::invalid_spec, "ridge must be a finite non-negative number");
  }
  const auto y = panel.column(spec.target);
  std::vector<std::span<const double>> feats;
  for (const auto& f : spec.features) feats.push_back(panel.column(f));

  const std::size_t n = panel.rows();
  const std::size_t p = spec.coefficient_count();
  const std::size_t offset = spec.include_intercept ? 1 : 0;
  if (n < p) {
    fail(ErrorCode::too_few_rows, "fit " + spec.target.str() + ": " + std::to_string(n) +
                                      " rows for " + std::to_string(p) + " coefficients");
  }
  for (std::size_t j = 0; j < feats.size(); ++j) {
    if (std::equal(feats[j].begin(), feats[j].end(), y.begin())) {
      fail(ErrorCode::invalid_spec, "feature " + spec.features[j].str() +
                                        " is an exact copy of target " + spec.target.str());
    }
  }

  std::vector<std::string> names;
  if (spec.include_intercept) names.emplace_back("intercept");
  for (const auto& f : spec.features) names.push_back(f.str());

  // Ridge rows are appended below the data so the same QR path solves both.
  const bool ridge = options.ridge > 0.0;
  const std::size_t m = n + (ridge ? feats.size() : 0);
  detail::ColMatrix a(m, p);
  std::vector<double> rhs(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (spec.include_intercept) a(i, 0) = 1.0;
    for (std::size_t j = 0; j < feats.size(); ++j) a(i, j + offset) = feats[j][i];
    rhs[i] = y[i];
  }
  if (ridge) {
    const double s = std::sqrt(options.ridge);
    for (std::size_t j = 0; j < feats.size(); ++j) a(n + j, j + offset) = s;
  }

  std::vector<double> scale(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += a(i, j) * a(i, j);
    scale[j] = std::sqrt(s);
    if (scale[j] == 0.0) {
      fail(ErrorCode::rank_deficient, "rank-deficient design for " + spec.target.str() +
                                          ": column " + names[j] + " is identically zero");
    }
    for (std::size_t i = 0; i < m; ++i) a(i, j) /= scale[j];
  }

  // Householder QR, R left in the upper triangle of `a`, Q^T applied to rhs.
  std::vector<double> v(m);
  for (std::size_t k = 0; k < p; ++k) {
    double norm2 = 0.0;
    for (std::size_t i = k; i < m; ++i) norm2 += a(i, k) * a(i, k);
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) continue;
    const double alpha = a(k, k) > 0.0 ? -norm : norm;
    for (std::size_t i = k; i < m; ++i) v[i] = a(i, k);
    v[k] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < m; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = k; j < p; ++j) {
      double dot = 0.0;
      for (std::size_t i = k; i < m; ++i) dot += v[i] * a(i, j);
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = k; i < m; ++i) a(i, j) -= f * v[i];
    }
    double dot = 0.0;
    for (std::size_t i = k; i < m; ++i) dot += v[i] * rhs[i];
    const double f = 2.0 * dot / vnorm2;
    for (std::size_t i = k; i < m; ++i) rhs[i] -= f * v[i];
    a(k, k) = alpha;
    for (std::size_t i = k + 1; i < m; ++i) a(i, k) = 0.0;
  }

  detail::ColMatrix r(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i <= j; ++i) r(i, j) = a(i, j);
  }

  // The weakest pivot identifies the column closest to the span of the
  // columns before it.
  std::size_t weakest = 0;
  double rmax = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    rmax = std::max(rmax, std::abs(r(k, k)));
    if (std::abs(r(k, k)) < std::abs(r(weakest, weakest))) weakest = k;
  }
  double cond = std::numeric_limits<double>::infinity();
  if (r(weakest, weakest) != 0.0) {
    cond = detail::one_norm(r) * detail::one_norm(detail::upper_inverse(r));
  }
  if (!(cond <= kMaxConditionEstimate)) {
    fail(ErrorCode::rank_deficient,
         "rank-deficient design for " + spec.target.str() + ": column " + names[weakest] +
             " is (nearly) a linear combination of " + detail::join_names(names, weakest) +
             "; condition estimate " + detail::sci(cond) + " exceeds " +
             detail::sci(kMaxConditionEstimate));
  }

  std::vector<double> z(p, 0.0);
  for (std::size_t ii = p; ii-- > 0;) {
    double s = rhs[ii];
    for (std::size_t k = ii + 1; k < p; ++k) s -= r(ii, k) * z[k];
    z[ii] = s / r(ii, ii);
  }

  RegressionModel model{spec, std::vector<double>(p), {}};
  for (std::size_t j = 0; j < p; ++j) {
    model.weights[j] = z[j] / scale[j];
    if (!std::isfinite(model.weights[j])) {
      fail(ErrorCode::rank_deficient, "non-finite weight for " + names[j]);
    }
  }

  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = model.intercept();
    for (std::size_t j = 0; j < feats.size(); ++j) pred += model.weights[j + offset] * feats[j][i];
    const double e = y[i] - pred;
    rss += e * e;
  }
  model.diagnostics.residual_sum_of_squares = rss;
  model.diagnostics.training_rows = n;
  model.diagnostics.condition_estimate = cond;

  if (options.standardize && n >= 2) {
    auto sd = [](std::span<const double> x) {
      double mu = 0.0;
      for (double v : x) mu += v;
      mu /= static_cast<double>(x.size());
      double s = 0.0;
      for (double v : x) s += (v - mu) * (v - mu);
      return std::sqrt(s / static_cast<double>(x.size() - 1));
    };
    const double sy = sd(y);
    std::vector<double> zw;
    for (std::size_t j = 0; j < feats.size(); ++j) {
      zw.push_back(sy > 0.0 ? model.weights[j + offset] * sd(feats[j]) / sy : 0.0);
    }
    model.diagnostics.standardized_weights = std::move(zw);
  }
  return model;
}

/// Point prediction per panel row: intercept + weights . features.
inline std::vector<double> predict(const RegressionModel& model, const AlignedPanel& panel) {
  std::vector<std::span<const double>> feats;
  for (const auto& f : model.spec.features) {
    if (!panel.has_column(f)) {
      fail(ErrorCode::unknown_column, "predict " + model.spec.target.str() +
                                          ": missing feature column " + f.str());
    }
    feats.push_back(panel.column(f));
  }
  const auto slopes = model.slopes();
  std::vector<double> out(panel.rows());
  for (std::size_t i = 0; i < panel.rows(); ++i) {
    double s = model.intercept();
    for (std::size_t j = 0; j < feats.size(); ++j) s += slopes[j] * feats[j][i];
    out[i] = s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json spec_to_json(const FeatureSpec& spec) {
  nlohmann::ordered_json j;
  j["target"] = spec.target.str();
  j["features"] = nlohmann::ordered_json::array();
  for (const auto& f : spec.features) j["features"].push_back(f.str());
  j["include_intercept"] = spec.include_intercept;
  return j;
}

inline FeatureSpec spec_from_json(const nlohmann::json& j) {
  FeatureSpec spec;
  spec.target = ColumnKey::parse(j.at("target").get<std::string>());
  for (const auto& f : j.at("features")) spec.features.push_back(ColumnKey::parse(f.get<std::string>()));
  spec.include_intercept = j.value("include_intercept", true);
  spec.validate();
  return spec;
}

inline nlohmann::ordered_json model_to_json(const RegressionModel& model) {
  nlohmann::ordered_json j;
  j["spec"] = spec_to_json(model.spec);
  j["weights"] = model.weights;
  nlohmann::ordered_json d;
  d["residual_sum_of_squares"] = model.diagnostics.residual_sum_of_squares;
  d["training_rows"] = model.diagnostics.training_rows;
  d["condition_estimate"] = model.diagnostics.condition_estimate;
  if (model.diagnostics.standardized_weights) {
    d["standardized_weights"] = *model.diagnostics.standardized_weights;
  }
  j["diagnostics"] = std::move(d);
  return j;
}

inline RegressionModel model_from_json(const nlohmann::json& j) {
  RegressionModel model;
  model.spec = spec_from_json(j.at("spec"));
  model.weights = j.at("weights").get<std::vector<double>>();
  if (model.weights.size() != model.spec.coefficient_count()) {
    fail(ErrorCode::invariant, "model has " + std::to_string(model.weights.size()) +
                                   " weights, spec needs " +
                                   std::to_string(model.spec.coefficient_count()));
  }
  for (double w : model.weights) {
    if (!std::isfinite(w)) fail(ErrorCode::invariant, "model weight is not finite");
  }
  const auto& d = j.at("diagnostics");
  model.diagnostics.residual_sum_of_squares = d.at("residual_sum_of_squares").get<double>();
  model.diagnostics.training_rows = d.at("training_rows").get<std::size_t>();
  model.diagnostics.condition_estimate = d.at("condition_estimate").get<double>();
  if (d.contains("standardized_weights")) {
    model.diagnostics.standardized_weights = d["standardized_weights"].get<std::vector<double>>();
  }
  return model;
}

}  // namespace eventlens
