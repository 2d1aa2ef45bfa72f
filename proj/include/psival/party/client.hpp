#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "psival/binning/binning.hpp"
#include "psival/cmi/cmi.hpp"
#include "psival/ident/crypto.hpp"
#include "psival/party/dataset.hpp"
#include "psival/psi/client.hpp"
#include "psival/psi/session.hpp"

namespace psival::party {

/// What a party sends, plus the local-only mapping from the positional
/// pseudonyms ("p2.f1", "p1.label") back to its column names.
struct PreparedSubmission {
  std::vector<binning::FeatureGroups> features;
  std::map<std::string, std::string> column_of;
};

std::string feature_pseudonym(const std::string& party_id, std::size_t ordinal);
std::string label_pseudonym(const std::string& party_id);

PreparedSubmission prepare_submission(const PartyDataset& dataset, const ident::SecretKey& key);

struct FeatureValuation {
  std::string pseudonym;
  std::string column;
  cmi::ShapleyEstimate estimate;
  double share = 0.0;  // of this party's total
};

struct LocalValuation {
  std::string party_id;
  std::uint64_t common_id_count = 0;
  std::vector<FeatureValuation> features;  // sorted by pseudonym
  bool degenerate_total = false;
};

/// Turns the coordinator's counts into per-feature Shapley-CMI estimates.
LocalValuation evaluate_results(const std::string& party_id, const psi::PartyResults& results,
                                const std::map<std::string, std::string>& column_of);

struct PartyRunConfig {
  std::string server_url;
  std::string session_id;
  psi::ClientOptions client{};
  // Status polling: 250 ms doubling up to 8 s.
  psi::Backoff polling{std::chrono::milliseconds(250), 2.0, std::chrono::milliseconds(8000), 60};
};

/// submit -> poll status -> fetch -> evaluate. Throws ProtocolError with the
/// coordinator's code (NO_OVERLAP included) or TransportError once the retry
/// or polling budget is spent.
LocalValuation run_party(const PartyDataset& dataset, const ident::SecretKey& key, const PartyRunConfig& config);

/// valuation.json, valuation.txt and pseudonyms.json in `dir`.
void write_local_valuation(const LocalValuation& valuation, const std::filesystem::path& dir);

}  // namespace psival::party
