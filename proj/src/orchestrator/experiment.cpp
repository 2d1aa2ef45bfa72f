#include "psival/orchestrator/experiment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <future>
#include <map>
#include <set>
#include <unordered_map>

#include "psival/binning/binning.hpp"
#include "psival/cmi/oracle.hpp"
#include "psival/psi/client.hpp"
#include "psival/psi/service.hpp"

namespace psival::orchestrator {

std::vector<party::PartyDataset> split_dataset(const party::PartyDataset& table, std::size_t party_count) {
  if (party_count < 2) throw ConfigError("at least two parties are required");
  if (table.features.size() < party_count) {
    throw ConfigError(std::to_string(table.features.size()) + " features cannot be split among " +
                      std::to_string(party_count) + " parties");
  }
  if (!table.label) throw ConfigError("the table has no label column");
  std::vector<party::PartyDataset> parties(party_count);
  for (std::size_t p = 0; p < party_count; ++p) {
    parties[p].party_id = "p" + std::to_string(p + 1);
    parties[p].ids = table.ids;
  }
  for (std::size_t k = 0; k < table.features.size(); ++k) {
    parties[k % party_count].features.push_back(table.features[k]);
  }
  parties.front().label = table.label;
  return parties;
}

std::vector<cmi::ShapleyEstimate> oracle_for_parties(std::span<const party::PartyDataset> parties,
                                                     std::span<const Ordering> orderings) {
  if (parties.empty()) throw InputError("no parties");
  std::set<std::string> common(parties.front().ids.begin(), parties.front().ids.end());
  for (std::size_t p = 1; p < parties.size(); ++p) {
    const std::set<std::string> ids(parties[p].ids.begin(), parties[p].ids.end());
    std::set<std::string> next;
    std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(), std::inserter(next, next.end()));
    common.swap(next);
  }
  if (common.empty()) throw ProtocolError(ErrorCode::NoOverlap, "parties share no common ids");

  // Bin on the owner's full rows, then keep only common rows in a fixed order.
  const auto restrict = [&](const party::PartyDataset& ds, const std::vector<binning::BinIndex>& bins) {
    std::unordered_map<std::string, binning::BinIndex> by_id;
    for (std::size_t i = 0; i < ds.ids.size(); ++i) by_id.emplace(ds.ids[i], bins[i]);
    cmi::BinColumn out;
    out.reserve(common.size());
    for (const auto& id : common) out.push_back(by_id.at(id));
    return out;
  };

  std::map<std::string, cmi::BinColumn> columns;
  std::optional<cmi::BinColumn> label;
  for (const auto& ds : parties) {
    for (std::size_t k = 0; k < ds.features.size(); ++k) {
      const auto& col = ds.features[k];
      columns.emplace(party::feature_pseudonym(ds.party_id, k + 1), restrict(ds, binning::make_bins(col.values, col.spec)));
    }
    if (ds.label) {
      if (label) throw InputError("more than one party holds a label");
      label = restrict(ds, binning::make_bins(ds.label->values, {1, binning::Strategy::Categorical}));
    }
  }
  if (!label) throw InputError("no party holds the label");
  return cmi::oracle_shapley_cmi(columns, *label, orderings);
}

double ComparisonTable::max_abs_difference() const {
  double m = 0.0;
  for (const auto& r : rows) {
    if (std::isnan(r.abs_difference)) return r.abs_difference;
    m = std::max(m, r.abs_difference);
  }
  return m;
}

ComparisonTable compare(std::span<const party::LocalValuation> protocol,
                        std::span<const cmi::ShapleyEstimate> oracle,
                        std::span<const std::pair<std::string, std::pair<std::string, std::string>>> columns,
                        double tolerance) {
  std::map<std::string, double> protocol_values;
  ComparisonTable table;
  table.tolerance = tolerance;
  for (const auto& lv : protocol) {
    table.common_id_count = lv.common_id_count;
    for (const auto& f : lv.features) protocol_values[f.pseudonym] = f.estimate.value;
  }
  std::map<std::string, double> oracle_values;
  for (const auto& e : oracle) oracle_values[e.feature_label] = e.value;

  std::vector<cmi::ShapleyEstimate> for_shares;
  for (const auto& [pseudonym, meta] : columns) {
    const auto p = protocol_values.find(pseudonym);
    const auto o = oracle_values.find(pseudonym);
    if (p == protocol_values.end() || o == oracle_values.end()) {
      throw ProtocolError(ErrorCode::Internal, "no valuation for feature " + pseudonym);
    }
    table.rows.push_back(ComparisonRow{pseudonym, meta.first, meta.second, p->second, o->second, 0.0,
                                       std::abs(p->second - o->second)});
    for_shares.push_back(cmi::ShapleyEstimate{pseudonym, p->second, {}, 0});
  }
  const auto report = cmi::normalize_report(std::move(for_shares));
  table.degenerate_total = report.degenerate_total;
  for (auto& row : table.rows) row.normalized_share = report.normalized_shares.at(row.feature);
  return table;
}

ComparisonTable run_experiment(const ExperimentConfig& config, const ident::SecretKey& key) {
  party::IngestOptions ingest;
  ingest.id_column = config.id_column;
  ingest.label_column = config.label_column;
  ingest.delimiter = config.delimiter;
  ingest.default_spec = binning::BinningSpec{config.bin_count, binning::Strategy::EqualWidth};
  if (config.bin_count < 1) throw ConfigError("bin count must be at least 1");
  if (config.permutation_count < 1) throw ConfigError("permutation count must be at least 1");

  const party::PartyDataset table = party::ingest_csv(config.dataset, "central", ingest);
  if (config.expected_shape) {
    const auto [rows, cols] = *config.expected_shape;
    const std::size_t got_cols = table.features.size() + 1;
    if (table.rows() != rows || got_cols != cols) {
      throw ConfigError("dataset shape is " + std::to_string(table.rows()) + "x" + std::to_string(got_cols) +
                        ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  const auto parties = split_dataset(table, config.party_count);

  psi::ServiceConfig service_config;
  service_config.port = config.port;
  service_config.workers = config.workers;
  psi::CoordinatorService service(service_config);
  const int port = service.start();
  const std::string url = "http://127.0.0.1:" + std::to_string(port);

  psi::SessionConfig session;
  for (const auto& p : parties) session.expected_parties.push_back({p.party_id, p.label.has_value()});
  session.permutation_count = config.permutation_count;
  session.rng_seed = config.seed;
  const std::string session_id = psi::CoordinatorClient(url).create_session(session);
  spdlog::info("session {}: {} parties, {} features, {} permutations", session_id, parties.size(),
               table.features.size(), config.permutation_count);

  std::vector<std::future<party::LocalValuation>> runs;
  for (const auto& p : parties) {
    runs.push_back(std::async(std::launch::async, [&, url] {
      party::PartyRunConfig run{url, session_id, {}, {}};
      run.polling.initial = std::chrono::milliseconds(50);
      return party::run_party(p, key, run);
    }));
  }
  std::vector<party::LocalValuation> valuations;
  std::exception_ptr failure;
  std::string failed_party;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    try {
      valuations.push_back(runs[i].get());
    } catch (...) {
      if (!failure) {
        failure = std::current_exception();
        failed_party = parties[i].party_id;
      }
    }
  }
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const ProtocolError& e) {
      throw ProtocolError(e.code(), "party " + failed_party + ": " + e.what());
    } catch (const TransportError& e) {
      throw TransportError("party " + failed_party + ": " + e.what());
    }
  }

  const auto orderings = service.coordinator().orderings(session_id);
  const auto oracle = oracle_for_parties(parties, orderings);

  // Rows follow the original column order.
  std::map<std::string, std::pair<std::string, std::string>> by_column;
  for (const auto& p : parties) {
    for (std::size_t k = 0; k < p.features.size(); ++k) {
      by_column[p.features[k].name] = {party::feature_pseudonym(p.party_id, k + 1), p.party_id};
    }
  }
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> columns;
  for (const auto& col : table.features) {
    const auto& [pseudonym, owner] = by_column.at(col.name);
    columns.push_back({pseudonym, {col.name, owner}});
  }

  ComparisonTable result = compare(valuations, oracle, columns, config.tolerance);
  result.party_count = parties.size();
  result.bin_count = config.bin_count;
  result.seed = config.seed;
  result.orderings = orderings;
  service.stop();
  return result;
}

}  // namespace psival::orchestrator
