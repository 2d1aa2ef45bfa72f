#include "psival/binning/binning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "psival/errors.hpp"

namespace psival::binning {

namespace {

std::vector<BinIndex> equal_width(std::span<const double> values, int bin_count) {
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<BinIndex> bins(values.size(), 0);
  if (range == 0.0) return bins;
  const BinIndex last = bin_count - 1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double pos = std::floor((values[i] - lo) * bin_count / range);
    bins[i] = std::clamp(static_cast<BinIndex>(pos), BinIndex{0}, last);
  }
  return bins;
}

std::vector<BinIndex> categorical(std::span<const double> values) {
  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<BinIndex> bins(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    bins[i] = static_cast<BinIndex>(std::lower_bound(distinct.begin(), distinct.end(), values[i]) -
                                    distinct.begin());
  }
  return bins;
}

}  // namespace

std::vector<BinIndex> make_bins(std::span<const double> values, const BinningSpec& spec) {
  if (spec.bin_count < 1) throw ConfigError("bin_count must be at least 1");
  if (values.empty()) throw InputError("cannot bin an empty column");
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("cannot bin a non-finite value");
  }
  switch (spec.strategy) {
    case Strategy::EqualWidth:
      return equal_width(values, spec.bin_count);
    case Strategy::Categorical:
      return categorical(values);
  }
  throw ConfigError("unknown binning strategy");
}

std::size_t FeatureGroups::id_count() const noexcept {
  std::size_t total = 0;
  for (const auto& g : groups) total += g.members.size();
  return total;
}

FeatureGroups build_feature_groups(std::string feature_label, std::string owner,
                                   std::span<const ident::EncryptedId> encrypted_ids,
                                   std::span<const BinIndex> bin_assignments, bool is_label) {
  if (encrypted_ids.size() != bin_assignments.size()) {
    throw InputError("feature " + feature_label + ": " + std::to_string(encrypted_ids.size()) +
                     " ids but " + std::to_string(bin_assignments.size()) + " bin assignments");
  }
  std::unordered_set<ident::EncryptedId> seen;
  seen.reserve(encrypted_ids.size());
  std::map<BinIndex, std::vector<ident::EncryptedId>> by_bin;
  for (std::size_t i = 0; i < encrypted_ids.size(); ++i) {
    if (!seen.insert(encrypted_ids[i]).second) {
      throw InputError("feature " + feature_label + ": duplicate encrypted id");
    }
    by_bin[bin_assignments[i]].push_back(encrypted_ids[i]);
  }

  FeatureGroups out{std::move(feature_label), std::move(owner), is_label, {}};
  out.groups.reserve(by_bin.size());
  for (auto& [bin, members] : by_bin) {
    std::sort(members.begin(), members.end());
    out.groups.push_back(IdGroup{bin, std::move(members)});
  }
  return out;
}

}  // namespace psival::binning
