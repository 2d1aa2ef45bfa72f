#pragma once

// JSON bodies exchanged with the coordinator.
//
//   POST /sessions
//     {"expected_parties":[{"id":..,"is_task_party":..}], "permutation_count":M,
//      "rng_seed":S, "permutations":[[label,...],...]?}        -> {"session_id":..}
//   POST /sessions/{id}/submissions
//     {"party_id":.., "features":[{"feature_label":..,"is_label":..,
//      "groups":[{"bin_index":k,"members":[hex64,...]}]}]}      -> {"accepted":true,"parties_remaining":r}
//   GET /sessions/{id}/status                                   -> {"phase":..,"parties_remaining":r}
//   GET /sessions/{id}/results?party=P
//     -> {"common_id_count":n, "features":[{"feature_label":..,
//         "permutations":[{"permutation_index":i,"quads":[{"a":..,"b":..,"c":..,"d":..}]}]}]}
//   errors                                                      -> {"error_code":..,"message":..}
//
// Parsers throw ProtocolError(MalformedGroups) on schema violations.

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <vector>

#include "psival/psi/session.hpp"

namespace psival::psi::wire {

using nlohmann::json;

struct Submission {
  std::string party_id;
  std::vector<binning::FeatureGroups> features;
};

json create_session_body(const SessionConfig& config);
SessionConfig parse_create_session(const json& body);

json submission_body(const Submission& submission);
Submission parse_submission(const json& body);

json submission_ack_body(std::size_t parties_remaining);

json status_body(const SessionStatus& status);
SessionStatus parse_status(const json& body);

json results_body(const PartyResults& results);
PartyResults parse_results(const json& body);

json error_body(ErrorCode code, const std::string& message);

json orderings_body(std::span<const Ordering> orderings);
std::vector<Ordering> parse_orderings(const json& body);

/// Compact, key-sorted rendering; identical values give identical bytes.
std::string dump(const json& body);

}  // namespace psival::psi::wire
