#include "psival/psi/counting.hpp"

#include <algorithm>
#include <limits>
#include <thread>
#include <unordered_map>

#include "psival/errors.hpp"
#include "psival/kernels/kernels.hpp"
#include "psival/psi/permutations.hpp"

namespace psival::psi {

namespace {

constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

std::vector<ident::EncryptedId> member_union(const binning::FeatureGroups& f) {
  std::vector<ident::EncryptedId> ids;
  ids.reserve(f.id_count());
  for (const auto& g : f.groups) ids.insert(ids.end(), g.members.begin(), g.members.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

// Row-wise scratch for one worker.
class Walker {
 public:
  explicit Walker(const IdIndex& index) : index_(index), n_(index.common_count()) {
    for (auto* v : {&cond_, &key_, &dense_d_, &dense_cy_, &dense_dy_}) v->resize(n_);
    remap_.reserve(n_);
  }

  std::vector<std::vector<cmi::PsiQuad>> walk(const Ordering& ordering) {
    std::fill(cond_.begin(), cond_.end(), 0u);
    std::uint32_t cond_card = 1;
    std::vector<std::vector<cmi::PsiQuad>> out;
    out.reserve(ordering.size());
    const IndexedColumn& y = index_.label();
    for (const std::string& name : ordering) {
      const IndexedColumn& f = index_.feature(name);
      out.push_back(step(cond_card, f, y));
    }
    return out;
  }

 private:
  std::vector<cmi::PsiQuad> step(std::uint32_t& cond_card, const IndexedColumn& f, const IndexedColumn& y) {
    kernels::combine_keys(cond_, f.cardinality, f.codes, key_);
    const std::uint32_t card_d = densify(checked_range(cond_card, f.cardinality), dense_d_);

    kernels::combine_keys(cond_, y.cardinality, y.codes, key_);
    const std::uint32_t card_cy = densify(checked_range(cond_card, y.cardinality), dense_cy_);

    kernels::combine_keys(dense_d_, y.cardinality, y.codes, key_);
    const std::uint32_t card_dy = densify(checked_range(card_d, y.cardinality), dense_dy_);

    const auto count_a = tally(dense_dy_, card_dy);
    const auto count_b = tally(dense_cy_, card_cy);
    const auto count_c = tally(dense_d_, card_d);
    const auto count_d = tally(cond_, cond_card);

    std::vector<cmi::PsiQuad> quads;
    quads.reserve(card_dy);
    // Codes are handed out in row order, so a row introduces a new
    // combination exactly when its code equals the number seen so far.
    for (std::size_t i = 0; i < n_; ++i) {
      if (dense_dy_[i] != quads.size()) continue;
      quads.push_back(cmi::PsiQuad{count_a[dense_dy_[i]], count_b[dense_cy_[i]], count_c[dense_d_[i]],
                                   count_d[cond_[i]]});
    }

    cond_.swap(dense_d_);
    cond_card = card_d;
    return quads;
  }

  static std::uint64_t checked_range(std::uint32_t major_card, std::uint32_t radix) {
    const std::uint64_t range = std::uint64_t{major_card} * radix;
    if (range > kUnassigned) {
      throw InputError("too many distinct value combinations for 32-bit row keys");
    }
    return range;
  }

  // Rewrites key_ into first-appearance codes 0..k-1; returns k.
  std::uint32_t densify(std::uint64_t range, std::vector<std::uint32_t>& out) {
    std::uint32_t next = 0;
    if (range <= std::max<std::uint64_t>(4 * n_, 1u << 16)) {
      dense_remap_.assign(range, kUnassigned);
      for (std::size_t i = 0; i < n_; ++i) {
        std::uint32_t& slot = dense_remap_[key_[i]];
        if (slot == kUnassigned) slot = next++;
        out[i] = slot;
      }
    } else {
      remap_.clear();
      for (std::size_t i = 0; i < n_; ++i) {
        auto [it, inserted] = remap_.try_emplace(key_[i], next);
        if (inserted) ++next;
        out[i] = it->second;
      }
    }
    return next;
  }

  std::vector<std::uint64_t> tally(const std::vector<std::uint32_t>& codes, std::uint32_t card) const {
    std::vector<std::uint64_t> counts(card, 0);
    for (std::uint32_t c : codes) ++counts[c];
    return counts;
  }

  const IdIndex& index_;
  std::size_t n_;
  std::vector<std::uint32_t> cond_, key_, dense_d_, dense_cy_, dense_dy_;
  std::vector<std::uint32_t> dense_remap_;
  std::unordered_map<std::uint32_t, std::uint32_t> remap_;
};

}  // namespace

std::vector<ident::EncryptedId> compute_common_ids(std::span<const binning::FeatureGroups> features) {
  if (features.empty()) throw ProtocolError(ErrorCode::NoOverlap, "no features submitted");
  std::vector<ident::EncryptedId> common = member_union(features.front());
  for (std::size_t i = 1; i < features.size() && !common.empty(); ++i) {
    const auto ids = member_union(features[i]);
    std::vector<ident::EncryptedId> next;
    next.reserve(std::min(common.size(), ids.size()));
    std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(), std::back_inserter(next));
    common.swap(next);
  }
  if (common.empty()) throw ProtocolError(ErrorCode::NoOverlap, "parties share no common ids");
  return common;
}

IdIndex IdIndex::build(std::span<const binning::FeatureGroups> features) {
  IdIndex index;
  index.common_ = compute_common_ids(features);
  const std::size_t n = index.common_.size();
  if (n > kUnassigned) throw InputError("too many common ids");

  std::unordered_map<ident::EncryptedId, std::uint32_t> row_of;
  row_of.reserve(n);
  for (std::size_t i = 0; i < n; ++i) row_of.emplace(index.common_[i], static_cast<std::uint32_t>(i));

  bool have_label = false;
  for (const auto& fg : features) {
    IndexedColumn col{fg.feature_label, fg.owner, std::vector<std::uint32_t>(n, kUnassigned),
                      static_cast<std::uint32_t>(fg.groups.size())};
    std::uint32_t code = 0;
    for (const auto& group : fg.groups) {
      for (const auto& id : group.members) {
        const auto it = row_of.find(id);
        if (it == row_of.end()) continue;  // not common to every party
        std::uint32_t& slot = col.codes[it->second];
        if (slot != kUnassigned) {
          throw CorruptionError("feature " + fg.feature_label + ": id appears in more than one group");
        }
        slot = code;
      }
      ++code;
    }
    if (kernels::max_value(col.codes) == kUnassigned) {
      throw CorruptionError("feature " + fg.feature_label + ": common id without a group");
    }
    if (fg.is_label) {
      if (have_label) throw ProtocolError(ErrorCode::MalformedGroups, "more than one label column");
      have_label = true;
      index.label_ = std::move(col);
    } else {
      if (index.features_.contains(fg.feature_label)) {
        throw ProtocolError(ErrorCode::MalformedGroups, "duplicate feature label " + fg.feature_label);
      }
      index.features_.emplace(fg.feature_label, std::move(col));
    }
  }
  if (!have_label) throw ProtocolError(ErrorCode::MalformedGroups, "no label column submitted");
  if (index.features_.empty()) throw ProtocolError(ErrorCode::MalformedGroups, "no features submitted");
  return index;
}

const IndexedColumn& IdIndex::feature(const std::string& feature_label) const {
  const auto it = features_.find(feature_label);
  if (it == features_.end()) throw InputError("unknown feature " + feature_label);
  return it->second;
}

std::vector<std::string> IdIndex::feature_labels() const {
  std::vector<std::string> labels;
  labels.reserve(features_.size());
  for (const auto& [name, col] : features_) labels.push_back(name);
  return labels;
}

FeatureResults run_psi_counting(const IdIndex& index, std::span<const Ordering> orderings, unsigned workers) {
  const auto labels = index.feature_labels();
  if (!orderings_cover(orderings, labels)) {
    throw ProtocolError(ErrorCode::MalformedGroups, "orderings do not cover the submitted features");
  }

  // slots[p][k]: quads of the k-th feature of ordering p.
  std::vector<std::vector<std::vector<cmi::PsiQuad>>> slots(orderings.size());
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(std::max<std::size_t>(orderings.size(), 1)));
  if (workers == 1) {
    Walker walker(index);
    for (std::size_t p = 0; p < orderings.size(); ++p) slots[p] = walker.walk(orderings[p]);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            Walker walker(index);
            for (std::size_t p = w; p < orderings.size(); p += workers) slots[p] = walker.walk(orderings[p]);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  FeatureResults results;
  for (const auto& label : labels) results[label].reserve(orderings.size());
  for (std::size_t p = 0; p < orderings.size(); ++p) {
    for (std::size_t k = 0; k < orderings[p].size(); ++k) {
      results[orderings[p][k]].push_back(PermutationResult{orderings[p][k], p, std::move(slots[p][k])});
    }
  }
  return results;
}

}  // namespace psival::psi
