#pragma once

// Seeded feature orderings.
//
// The generator is std::mt19937_64 seeded with the session seed. Labels are
// sorted before shuffling, then each ordering is an independent Fisher-Yates
// pass (i = n-1 .. 1, j uniform in [0, i]) over the sorted list. The bounded
// draw rejects raw outputs below (2^64 - bound) mod bound and returns
// r mod bound, so the result depends only on the mt19937_64 stream.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "psival/ordering.hpp"

namespace psival::psi {

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Throws ConfigError on count < 1 or an empty label list.
std::vector<Ordering> generate_permutations(std::vector<std::string> feature_labels, std::size_t count,
                                            std::uint64_t seed);

/// Every ordering of the labels, in lexicographic order. Meant for small
/// feature counts (n! orderings).
std::vector<Ordering> all_orderings(std::vector<std::string> feature_labels);

/// True when every ordering is a bijection onto `feature_labels`.
bool orderings_cover(std::span<const Ordering> orderings, std::span<const std::string> feature_labels);

}  // namespace psival::psi
