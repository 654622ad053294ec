#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace peerlearn {

enum class ErrorCode {
  Validation,
  NotFound,
  Unauthorized,
  Forbidden,
  Lifecycle,
  Conflict,
  Eligibility,
  Precondition,
  UnknownRole,
  AlreadyUsed,
  InvalidCode,
  UnmappedTopic,
  Separation,
  Io,
  Corrupt,
};

std::string_view to_string(ErrorCode code);

// Domain failure carrying a stable machine-readable code. `details` lists the
// offending items (duplicate names, unmapped topics, ...) when there are any.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::vector<std::string> details = {})
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::vector<std::string> details = {}) {
  throw Error(code, message, std::move(details));
}

}  // namespace peerlearn
