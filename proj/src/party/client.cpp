#include "psival/party/client.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace psival::party {

std::string feature_pseudonym(const std::string& party_id, std::size_t ordinal) {
  return party_id + ".f" + std::to_string(ordinal);
}

std::string label_pseudonym(const std::string& party_id) { return party_id + ".label"; }

PreparedSubmission prepare_submission(const PartyDataset& dataset, const ident::SecretKey& key) {
  const auto ids = ident::encrypt_column(key, dataset.ids);
  PreparedSubmission out;
  for (std::size_t k = 0; k < dataset.features.size(); ++k) {
    const Column& col = dataset.features[k];
    if (col.values.size() != ids.size()) throw InputError("column " + col.name + " has the wrong length");
    const auto bins = binning::make_bins(col.values, col.spec);
    std::string label = feature_pseudonym(dataset.party_id, k + 1);
    out.column_of[label] = col.name;
    out.features.push_back(binning::build_feature_groups(std::move(label), dataset.party_id, ids, bins, false));
  }
  if (dataset.label) {
    if (dataset.label->values.size() != ids.size()) throw InputError("label column has the wrong length");
    const auto bins = binning::make_bins(dataset.label->values, {1, binning::Strategy::Categorical});
    std::string label = label_pseudonym(dataset.party_id);
    out.column_of[label] = dataset.label->name;
    out.features.push_back(binning::build_feature_groups(std::move(label), dataset.party_id, ids, bins, true));
  }
  return out;
}

LocalValuation evaluate_results(const std::string& party_id, const psi::PartyResults& results,
                                const std::map<std::string, std::string>& column_of) {
  std::map<std::string, std::vector<double>> per_feature;
  for (const auto& [label, perms] : results.features) {
    auto& cmis = per_feature[label];
    cmis.resize(perms.size());
    std::vector<bool> filled(perms.size(), false);
    for (const auto& p : perms) {
      if (p.permutation_index >= perms.size() || filled[p.permutation_index]) {
        throw ProtocolError(ErrorCode::Internal, "feature " + label + ": inconsistent permutation indices");
      }
      filled[p.permutation_index] = true;
      cmis[p.permutation_index] = cmi::cmi_from_quads(p.quads, results.common_id_count);
    }
  }
  auto report = cmi::normalize_report(cmi::shapley_from_permutations(per_feature));

  LocalValuation out{party_id, results.common_id_count, {}, report.degenerate_total};
  for (auto& est : report.estimates) {
    const auto it = column_of.find(est.feature_label);
    const double share = report.normalized_shares.at(est.feature_label);
    FeatureValuation fv{est.feature_label, it != column_of.end() ? it->second : std::string{}, std::move(est),
                        share};
    out.features.push_back(std::move(fv));
  }
  return out;
}

LocalValuation run_party(const PartyDataset& dataset, const ident::SecretKey& key, const PartyRunConfig& config) {
  PreparedSubmission prepared = prepare_submission(dataset, key);
  psi::CoordinatorClient client(config.server_url, config.client);
  client.submit(config.session_id, psi::wire::Submission{dataset.party_id, std::move(prepared.features)});

  const int polls = std::max(1, config.polling.max_attempts);
  for (int attempt = 0;; ++attempt) {
    const psi::SessionStatus st = client.status(config.session_id);
    if (st.phase == psi::Phase::Done) break;
    if (st.phase == psi::Phase::Failed) {
      const ErrorCode code = st.failure.value_or(ErrorCode::Internal);
      throw ProtocolError(code, "session failed: " + std::string(to_string(code)));
    }
    if (attempt + 1 >= polls) {
      throw TransportError("session not finished after " + std::to_string(polls) + " status polls");
    }
    std::this_thread::sleep_for(config.polling.delay(attempt));
  }
  const psi::PartyResults results = client.results(config.session_id, dataset.party_id);
  return evaluate_results(dataset.party_id, results, prepared.column_of);
}

void write_local_valuation(const LocalValuation& valuation, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json features = nlohmann::json::array();
  nlohmann::json pseudonyms = nlohmann::json::object();
  for (const auto& f : valuation.features) {
    features.push_back({{"feature", f.pseudonym},
                        {"column", f.column},
                        {"shapley_cmi", f.estimate.value},
                        {"share", f.share},
                        {"per_permutation_cmi", f.estimate.per_permutation_cmi}});
    pseudonyms[f.pseudonym] = f.column;
  }
  const nlohmann::json doc = {{"party_id", valuation.party_id},
                              {"common_id_count", valuation.common_id_count},
                              {"log_base", cmi::ValuationReport::kLogBase},
                              {"degenerate_total", valuation.degenerate_total},
                              {"features", std::move(features)}};

  std::ostringstream text;
  text << "party " << valuation.party_id << "  common ids " << valuation.common_id_count << "  (nats)\n";
  text << std::left << std::setw(12) << "feature" << std::setw(28) << "column" << std::right << std::setw(16)
       << "shapley_cmi" << std::setw(10) << "share" << '\n';
  for (const auto& f : valuation.features) {
    text << std::left << std::setw(12) << f.pseudonym << std::setw(28) << f.column << std::right << std::fixed
         << std::setprecision(10) << std::setw(16) << f.estimate.value << std::setprecision(4) << std::setw(10)
         << f.share << '\n';
  }

  const auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::trunc);
    out << content;
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
  };
  write("valuation.json", doc.dump(2) + "\n");
  write("valuation.txt", text.str());
  write("pseudonyms.json", pseudonyms.dump(2) + "\n");
}

}  // namespace psival::party
