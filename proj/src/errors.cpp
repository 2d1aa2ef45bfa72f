#include "psival/errors.hpp"

#include <array>
#include <utility>

namespace psival {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 8> kCodeNames{{
    {ErrorCode::UnknownSession, "UNKNOWN_SESSION"},
    {ErrorCode::DuplicateSubmission, "DUPLICATE_SUBMISSION"},
    {ErrorCode::MalformedGroups, "MALFORMED_GROUPS"},
    {ErrorCode::NotReady, "NOT_READY"},
    {ErrorCode::NoOverlap, "NO_OVERLAP"},
    {ErrorCode::UnauthorizedParty, "UNAUTHORIZED_PARTY"},
    {ErrorCode::LabelFromDataParty, "LABEL_FROM_DATA_PARTY"},
    {ErrorCode::Internal, "INTERNAL"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  for (const auto& [c, name] : kCodeNames) {
    if (c == code) return name;
  }
  return "INTERNAL";
}

std::optional<ErrorCode> parse_error_code(std::string_view text) noexcept {
  for (const auto& [c, name] : kCodeNames) {
    if (name == text) return c;
  }
  return std::nullopt;
}

}  // namespace psival
