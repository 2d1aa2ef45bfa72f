#include "psival/psi/permutations.hpp"

#include <algorithm>
#include <set>

#include "psival/errors.hpp"

namespace psival::psi {

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

std::vector<Ordering> generate_permutations(std::vector<std::string> feature_labels, std::size_t count,
                                            std::uint64_t seed) {
  if (count < 1) throw ConfigError("permutation count must be at least 1");
  if (feature_labels.empty()) throw ConfigError("no features to permute");
  std::sort(feature_labels.begin(), feature_labels.end());

  std::mt19937_64 rng(seed);
  std::vector<Ordering> out;
  out.reserve(count);
  for (std::size_t p = 0; p < count; ++p) {
    Ordering ordering = feature_labels;
    for (std::size_t i = ordering.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(uniform_below(rng, i + 1));
      std::swap(ordering[i], ordering[j]);
    }
    out.push_back(std::move(ordering));
  }
  return out;
}

std::vector<Ordering> all_orderings(std::vector<std::string> feature_labels) {
  std::sort(feature_labels.begin(), feature_labels.end());
  std::vector<Ordering> out;
  do {
    out.push_back(feature_labels);
  } while (std::next_permutation(feature_labels.begin(), feature_labels.end()));
  return out;
}

bool orderings_cover(std::span<const Ordering> orderings, std::span<const std::string> feature_labels) {
  const std::set<std::string> expected(feature_labels.begin(), feature_labels.end());
  if (expected.size() != feature_labels.size()) return false;
  for (const Ordering& o : orderings) {
    if (o.size() != expected.size()) return false;
    const std::set<std::string> got(o.begin(), o.end());
    if (got != expected) return false;
  }
  return true;
}

}  // namespace psival::psi
