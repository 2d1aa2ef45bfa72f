#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace psival {

/// Invalid configuration: bad key material, unusable options, unwritable paths.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that cannot be processed (empty columns, non-finite values, ...).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Counts or group structure that no well-formed run can produce.
class CorruptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wire-level error codes shared by the coordinator and its clients.
enum class ErrorCode {
  UnknownSession,
  DuplicateSubmission,
  MalformedGroups,
  NotReady,
  NoOverlap,
  UnauthorizedParty,
  LabelFromDataParty,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;
std::optional<ErrorCode> parse_error_code(std::string_view text) noexcept;

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// The coordinator could not be reached within the retry budget.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace psival
