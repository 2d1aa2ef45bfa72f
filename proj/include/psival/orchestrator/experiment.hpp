#pragma once

// Single-machine reproduction of a valuation run: split a table among
// simulated parties, serve the coordinator in-process, run every party over
// HTTP, then value the same binned data centrally with the exact orderings the
// coordinator used and compare the two.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psival/cmi/cmi.hpp"
#include "psival/ident/crypto.hpp"
#include "psival/ordering.hpp"
#include "psival/party/client.hpp"
#include "psival/party/dataset.hpp"

namespace psival::orchestrator {

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::string id_column = "id";
  std::string label_column = "class";
  std::size_t party_count = 3;
  int bin_count = 5;
  std::size_t permutation_count = 20;
  std::uint64_t seed = 42;
  std::filesystem::path output_dir;
  double tolerance = 1e-9;
  int port = 0;
  char delimiter = ',';
  // rows x (feature columns + label column)
  std::optional<std::pair<std::size_t, std::size_t>> expected_shape;
  unsigned workers = 0;
};

/// Round-robin over feature columns in file order: party k (1-based) gets
/// columns k, k+N, ... Party "p1" is the task party and holds the label;
/// every party gets the full ID column. Throws ConfigError when there are
/// fewer features than parties or fewer than two parties.
std::vector<party::PartyDataset> split_dataset(const party::PartyDataset& table, std::size_t party_count);

/// Centralized valuation of the parties' data: every column binned on its
/// owner's rows (as the party would), restricted to the IDs every party holds,
/// keyed by the same pseudonyms the parties submit under.
std::vector<cmi::ShapleyEstimate> oracle_for_parties(std::span<const party::PartyDataset> parties,
                                                     std::span<const Ordering> orderings);

struct ComparisonRow {
  std::string feature;  // pseudonym
  std::string column;
  std::string owner;
  double protocol_shapley_cmi = 0.0;
  double oracle_shapley_cmi = 0.0;
  double normalized_share = 0.0;
  double abs_difference = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  double tolerance = 1e-9;
  std::uint64_t common_id_count = 0;
  std::size_t party_count = 0;
  int bin_count = 0;
  std::uint64_t seed = 0;
  std::vector<Ordering> orderings;
  bool degenerate_total = false;

  double max_abs_difference() const;
  bool passed() const { return max_abs_difference() <= tolerance; }
};

/// Joins protocol-side valuations with oracle estimates. `columns` maps each
/// pseudonym to (column name, owner) and fixes the row order.
ComparisonTable compare(std::span<const party::LocalValuation> protocol,
                        std::span<const cmi::ShapleyEstimate> oracle,
                        std::span<const std::pair<std::string, std::pair<std::string, std::string>>> columns,
                        double tolerance);

ComparisonTable run_experiment(const ExperimentConfig& config, const ident::SecretKey& key);

/// comparison.json and comparison.txt in `dir`. Contains no timestamps, so a
/// rerun with the same inputs produces identical bytes.
void emit_report(const ComparisonTable& table, const std::filesystem::path& dir);

std::string render_text(const ComparisonTable& table);
std::string render_json(const ComparisonTable& table);

}  // namespace psival::orchestrator
