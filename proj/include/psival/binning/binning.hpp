#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psival/ident/crypto.hpp"

namespace psival::binning {

using BinIndex = std::int32_t;

enum class Strategy {
  EqualWidth,
  // One bin per distinct value, ranked in ascending order. Used for labels.
  Categorical,
};

struct BinningSpec {
  int bin_count = 5;
  Strategy strategy = Strategy::EqualWidth;
};

/// Discretizes one column using its own min/max (equal-width) or the sorted
/// distinct values (categorical). Throws InputError on empty or non-finite
/// input and ConfigError on bin_count < 1.
std::vector<BinIndex> make_bins(std::span<const double> values, const BinningSpec& spec);

struct IdGroup {
  BinIndex bin_index = 0;
  std::vector<ident::EncryptedId> members;  // sorted ascending

  bool operator==(const IdGroup&) const = default;
};

/// One feature's partition of a party's encrypted IDs into value bins.
struct FeatureGroups {
  std::string feature_label;
  std::string owner;
  bool is_label = false;
  std::vector<IdGroup> groups;  // sorted by bin_index, no empty groups

  std::size_t id_count() const noexcept;
  bool operator==(const FeatureGroups&) const = default;
};

FeatureGroups build_feature_groups(std::string feature_label, std::string owner,
                                   std::span<const ident::EncryptedId> encrypted_ids,
                                   std::span<const BinIndex> bin_assignments, bool is_label);

}  // namespace psival::binning
