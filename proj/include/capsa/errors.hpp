#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace capsa {

// Stable error identifiers. Names are part of the wire/audit surface:
// they appear verbatim in audit records and JSON-RPC error payloads.
enum class ErrorCode {
  // capsule
  MALFORMED_DEPENDENCY,
  ILLEGAL_TRANSITION,
  INVALID_CONTRACT,
  MISSING_ARTIFACT_ROLE,
  CARD_ALIAS_MISSING,
  HASH_FAILURE,
  // catalog
  VERSION_CONFLICT,
  STORE_IO_FAILURE,
  DUPLICATE_IMPORT,
  MALFORMED_DESCRIPTOR,
  CORRUPT_CAPSULE,
  // router
  UNKNOWN_PROFILE,
  EMPTY_QUERY,
  NOT_IN_SESSION,
  SESSION_EXPIRED,
  LIFECYCLE_CHANGED,
  MISSING_CREDENTIAL_MAPPING,
  EXECUTOR_FAILURE,
  AUDIT_IO_FAILURE,
  INVALID_AUDIT_RECORD,
  UNKNOWN_TOOL,
  UNKNOWN_SESSION,
  // validator
  BAD_PATTERN,
  SANDBOX_SPAWN_FAILURE,
  TIMEOUT,
  // bench
  EMPTY_SUITE,
  SUITE_CATALOG_MISMATCH,
  MALFORMED_SUITE,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MALFORMED_DEPENDENCY: return "MALFORMED_DEPENDENCY";
    case ErrorCode::ILLEGAL_TRANSITION: return "ILLEGAL_TRANSITION";
    case ErrorCode::INVALID_CONTRACT: return "INVALID_CONTRACT";
    case ErrorCode::MISSING_ARTIFACT_ROLE: return "MISSING_ARTIFACT_ROLE";
    case ErrorCode::CARD_ALIAS_MISSING: return "CARD_ALIAS_MISSING";
    case ErrorCode::HASH_FAILURE: return "HASH_FAILURE";
    case ErrorCode::VERSION_CONFLICT: return "VERSION_CONFLICT";
    case ErrorCode::STORE_IO_FAILURE: return "STORE_IO_FAILURE";
    case ErrorCode::DUPLICATE_IMPORT: return "DUPLICATE_IMPORT";
    case ErrorCode::MALFORMED_DESCRIPTOR: return "MALFORMED_DESCRIPTOR";
    case ErrorCode::CORRUPT_CAPSULE: return "CORRUPT_CAPSULE";
    case ErrorCode::UNKNOWN_PROFILE: return "UNKNOWN_PROFILE";
    case ErrorCode::EMPTY_QUERY: return "EMPTY_QUERY";
    case ErrorCode::NOT_IN_SESSION: return "NOT_IN_SESSION";
    case ErrorCode::SESSION_EXPIRED: return "SESSION_EXPIRED";
    case ErrorCode::LIFECYCLE_CHANGED: return "LIFECYCLE_CHANGED";
    case ErrorCode::MISSING_CREDENTIAL_MAPPING: return "MISSING_CREDENTIAL_MAPPING";
    case ErrorCode::EXECUTOR_FAILURE: return "EXECUTOR_FAILURE";
    case ErrorCode::AUDIT_IO_FAILURE: return "AUDIT_IO_FAILURE";
    case ErrorCode::INVALID_AUDIT_RECORD: return "INVALID_AUDIT_RECORD";
    case ErrorCode::UNKNOWN_TOOL: return "UNKNOWN_TOOL";
    case ErrorCode::UNKNOWN_SESSION: return "UNKNOWN_SESSION";
    case ErrorCode::BAD_PATTERN: return "BAD_PATTERN";
    case ErrorCode::SANDBOX_SPAWN_FAILURE: return "SANDBOX_SPAWN_FAILURE";
    case ErrorCode::TIMEOUT: return "TIMEOUT";
    case ErrorCode::EMPTY_SUITE: return "EMPTY_SUITE";
    case ErrorCode::SUITE_CATALOG_MISMATCH: return "SUITE_CATALOG_MISMATCH";
    case ErrorCode::MALFORMED_SUITE: return "MALFORMED_SUITE";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_code_name(code)) +
                           (detail.empty() ? "" : ": " + detail)),
        code_(code) {}

  ErrorCode code() const { return code_; }
  std::string_view code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace capsa
