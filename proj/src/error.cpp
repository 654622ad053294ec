#include "peerlearn/error.hpp"

namespace peerlearn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return "validation";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Unauthorized: return "unauthorized";
    case ErrorCode::Forbidden: return "forbidden";
    case ErrorCode::Lifecycle: return "lifecycle";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Eligibility: return "eligibility";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::UnknownRole: return "unknown_role";
    case ErrorCode::AlreadyUsed: return "already_used";
    case ErrorCode::InvalidCode: return "invalid_code";
    case ErrorCode::UnmappedTopic: return "unmapped_topic";
    case ErrorCode::Separation: return "separation";
    case ErrorCode::Io: return "io";
    case ErrorCode::Corrupt: return "corrupt";
  }
  return "unknown";
}

}  // namespace peerlearn
