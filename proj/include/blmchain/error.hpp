#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blmchain {

enum class ErrorCode {
  empty_transaction_list,
  invalid_k,
  invalid_route,
  encoding_error,
  exhausted,
  neighborhood_too_large,
  instance_too_large,
  parse_error,
  config_error,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::empty_transaction_list: return "EmptyTransactionList";
    case ErrorCode::invalid_k: return "InvalidK";
    case ErrorCode::invalid_route: return "InvalidRoute";
    case ErrorCode::encoding_error: return "EncodingError";
    case ErrorCode::exhausted: return "Exhausted";
    case ErrorCode::neighborhood_too_large: return "NeighborhoodTooLarge";
    case ErrorCode::instance_too_large: return "InstanceTooLarge";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::config_error: return "ConfigError";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace blmchain
