#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eaims {

enum class ErrorCode {
  missing_field,
  self_reference,
  malformed_record,
  empty_terms,
  unknown_event,
  already_archived,
  unknown_post,
  unknown_topic,
  unknown_profile,
  invalid_argument,
  invalid_config,
  corrupt_snapshot,
  io_failure,
  bind_failure,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::missing_field: return "MissingField";
    case ErrorCode::self_reference: return "SelfReference";
    case ErrorCode::malformed_record: return "MalformedRecord";
    case ErrorCode::empty_terms: return "EmptyTerms";
    case ErrorCode::unknown_event: return "UnknownEvent";
    case ErrorCode::already_archived: return "AlreadyArchived";
    case ErrorCode::unknown_post: return "UnknownPost";
    case ErrorCode::unknown_topic: return "UnknownTopic";
    case ErrorCode::unknown_profile: return "UnknownProfile";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::corrupt_snapshot: return "CorruptSnapshot";
    case ErrorCode::io_failure: return "IoFailure";
    case ErrorCode::bind_failure: return "BindFailure";
  }
  return "Unknown";
}

/// Every failure surfaced by the library carries one of the codes above so
/// the HTTP layer can map it to a status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace eaims
