#pragma once

// Intersection counting over encrypted ID groups.
//
// For each ordering, features are walked in order. For feature f with
// conditioning set D (the features already walked) and label Y, every common
// ID whose (f, D, Y) bin combination has not been seen yet for this
// (feature, ordering) pair produces one quad
//   a = |X'_f ∩ X'_D ∩ Y' ∩ common|   b = |X'_D ∩ Y' ∩ common|
//   c = |X'_f ∩ X'_D ∩ common|        d = |X'_D ∩ common|
// after which every ID in that combination counts as processed.
//
// Instead of materializing set intersections, common IDs are given row
// numbers (sorted by digest) and every feature becomes a column of dense
// group codes. The conditioning set is tracked as one dense signature per
// row; extending it by a feature is a mixed-radix combine followed by
// re-densification. Quads come out in first-appearance row order.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "psival/binning/binning.hpp"
#include "psival/cmi/cmi.hpp"
#include "psival/ident/crypto.hpp"
#include "psival/ordering.hpp"

namespace psival::psi {

struct PermutationResult {
  std::string feature_label;
  std::size_t permutation_index = 0;
  std::vector<cmi::PsiQuad> quads;

  bool operator==(const PermutationResult&) const = default;
};

/// feature label -> one result per ordering, indexed by permutation_index.
using FeatureResults = std::map<std::string, std::vector<PermutationResult>>;

struct IndexedColumn {
  std::string label;
  std::string owner;
  std::vector<std::uint32_t> codes;  // one per common ID row
  std::uint32_t cardinality = 0;     // number of groups
};

/// Sorted intersection over every feature of the union of its groups. Throws
/// ProtocolError(NoOverlap) when empty.
std::vector<ident::EncryptedId> compute_common_ids(std::span<const binning::FeatureGroups> features);

class IdIndex {
 public:
  /// Needs exactly one is_label feature. Throws CorruptionError if an ID sits
  /// in two groups of one feature or a common ID has no group.
  static IdIndex build(std::span<const binning::FeatureGroups> features);

  std::size_t common_count() const noexcept { return common_.size(); }
  const std::vector<ident::EncryptedId>& common_ids() const noexcept { return common_; }
  const IndexedColumn& label() const noexcept { return label_; }
  const IndexedColumn& feature(const std::string& feature_label) const;
  /// Non-label feature labels, sorted.
  std::vector<std::string> feature_labels() const;

 private:
  std::vector<ident::EncryptedId> common_;
  IndexedColumn label_;
  std::map<std::string, IndexedColumn> features_;
};

/// Every ordering must cover exactly the index's non-label features.
/// Orderings are spread over `workers` threads; the output does not depend on
/// the worker count.
FeatureResults run_psi_counting(const IdIndex& index, std::span<const Ordering> orderings,
                                unsigned workers = 1);

}  // namespace psival::psi
