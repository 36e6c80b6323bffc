#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eventlens {

enum class ErrorCode {
  io,
  malformed,
  bad_header,
  invalid_bar,
  duplicate_date,
  provider_unreachable,
  provider_error,
  missing_api_key,
  cache_write,
  empty_intersection,
  duplicate_symbol,
  empty_window,
  unknown_column,
  length_mismatch,
  too_short,
  zero_variance,
  invalid_spec,
  rank_deficient,
  too_few_rows,
  empty_input,
  zero_denominator,
  invariant,
  config,
  usage,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::malformed: return "malformed";
    case ErrorCode::bad_header: return "bad_header";
    case ErrorCode::invalid_bar: return "invalid_bar";
    case ErrorCode::duplicate_date: return "duplicate_date";
    case ErrorCode::provider_unreachable: return "provider_unreachable";
    case ErrorCode::provider_error: return "provider_error";
    case ErrorCode::missing_api_key: return "missing_api_key";
    case ErrorCode::cache_write: return "cache_write";
    case ErrorCode::empty_intersection: return "empty_intersection";
    case ErrorCode::duplicate_symbol: return "duplicate_symbol";
    case ErrorCode::empty_window: return "empty_window";
    case ErrorCode::unknown_column: return "unknown_column";
    case ErrorCode::length_mismatch: return "length_mismatch";
    case ErrorCode::too_short: return "too_short";
    case ErrorCode::zero_variance: return "zero_variance";
    case ErrorCode::invalid_spec: return "invalid_spec";
    case ErrorCode::rank_deficient: return "rank_deficient";
    case ErrorCode::too_few_rows: return "too_few_rows";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::zero_denominator: return "zero_denominator";
    case ErrorCode::invariant: return "invariant";
    case ErrorCode::config: return "config";
    case ErrorCode::usage: return "usage";
  }
  return "unknown";
}

/// Every failure raised by the library carries a stable code so callers
/// (and the CLI's error line) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace eventlens
