#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace extendattack {

enum class ErrorCode {
  kInvalidDigit,
  kNonAsciiInput,
  kValueOutOfRange,
  kInvalidBase,
  kEmptyQuery,
  kRatioOutOfRange,
  kLedgerMismatch,
  kEmptyCorpus,
  kParseError,
  kDuplicateId,
  kDisjointIds,
  kConfiguration,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported as an Error carrying a
// stable code; callers (notably the CLI) map codes to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace extendattack
