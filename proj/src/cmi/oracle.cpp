#include "psival/cmi/oracle.hpp"

#include <algorithm>
#include <set>

#include "psival/errors.hpp"

namespace psival::cmi {

namespace {

using Tuple = std::vector<binning::BinIndex>;

Tuple conditioning_tuple(std::span<const BinColumn* const> conditioning, std::size_t row) {
  Tuple t;
  t.reserve(conditioning.size());
  for (const BinColumn* col : conditioning) t.push_back((*col)[row]);
  return t;
}

}  // namespace

double direct_cmi(std::span<const BinColumn* const> conditioning, const BinColumn& feature,
                  const BinColumn& label) {
  const std::size_t n = label.size();
  if (n == 0) throw InputError("direct_cmi: empty columns");
  if (feature.size() != n) throw InputError("direct_cmi: ragged columns");
  for (const BinColumn* col : conditioning) {
    if (col->size() != n) throw InputError("direct_cmi: ragged columns");
  }

  // Keys: conditioning tuple, then feature bin and/or label bin appended.
  std::map<Tuple, std::uint64_t> n_all, n_cond_y, n_cond_x, n_cond;
  for (std::size_t i = 0; i < n; ++i) {
    Tuple z = conditioning_tuple(conditioning, i);
    ++n_cond[z];
    Tuple zx = z;
    zx.push_back(feature[i]);
    ++n_cond_x[zx];
    Tuple zy = z;
    zy.push_back(label[i]);
    ++n_cond_y[zy];
    zx.push_back(label[i]);
    ++n_all[zx];
  }

  CompensatedSum sum;
  for (const auto& [key, a] : n_all) {
    const Tuple z(key.begin(), key.end() - 2);
    Tuple zx(key.begin(), key.end() - 1);
    Tuple zy = z;
    zy.push_back(key.back());
    sum.add(quad_term(PsiQuad{a, n_cond_y.at(zy), n_cond_x.at(zx), n_cond.at(z)}));
  }
  return sum.value() / static_cast<double>(n);
}

std::vector<ShapleyEstimate> oracle_shapley_cmi(const std::map<std::string, BinColumn>& columns,
                                                const BinColumn& label,
                                                std::span<const Ordering> permutations) {
  for (const auto& [name, col] : columns) {
    if (col.size() != label.size()) throw InputError("oracle: column " + name + " has a different length");
  }
  std::map<std::string, std::vector<double>> per_feature;
  for (const auto& [name, col] : columns) per_feature[name].reserve(permutations.size());

  for (const Ordering& ordering : permutations) {
    const std::set<std::string> members(ordering.begin(), ordering.end());
    if (members.size() != ordering.size() || members.size() != columns.size() ||
        !std::all_of(members.begin(), members.end(), [&](const auto& m) { return columns.contains(m); })) {
      throw InputError("oracle: ordering is not a permutation of the feature labels");
    }
    std::vector<const BinColumn*> conditioning;
    conditioning.reserve(ordering.size());
    for (const std::string& name : ordering) {
      const BinColumn& feature = columns.at(name);
      per_feature[name].push_back(direct_cmi(conditioning, feature, label));
      conditioning.push_back(&feature);
    }
  }
  return shapley_from_permutations(per_feature);
}

}  // namespace psival::cmi
