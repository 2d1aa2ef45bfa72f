#pragma once

// Centralized valuation straight from binned columns, with no protocol in
// between. Counts the joint occurrences of (x_d, x_D, y) tuples directly and
// evaluates the CMI sum per observed tuple.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "psival/binning/binning.hpp"
#include "psival/cmi/cmi.hpp"
#include "psival/ordering.hpp"

namespace psival::cmi {

using BinColumn = std::vector<binning::BinIndex>;

/// I(feature; label | conditioning...). All columns must have equal length >= 1.
double direct_cmi(std::span<const BinColumn* const> conditioning, const BinColumn& feature,
                  const BinColumn& label);

/// For each ordering and each feature at position k, the CMI of the feature
/// with the label given the k preceding features; averaged per feature.
/// Every ordering must be a permutation of the column labels.
std::vector<ShapleyEstimate> oracle_shapley_cmi(const std::map<std::string, BinColumn>& columns,
                                                const BinColumn& label,
                                                std::span<const Ordering> permutations);

}  // namespace psival::cmi
