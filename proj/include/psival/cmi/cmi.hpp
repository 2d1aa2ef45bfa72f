#pragma once

// Conditional mutual information from intersection cardinalities, and the
// Shapley aggregation over feature orderings.
//
// For one feature d with conditioning set D and label Y, every observed value
// combination (x_d, x_D, y) yields a quad of counts restricted to the common
// IDs:
//   a = N(x_d, x_D, y)     b = N(x_D, y)
//   c = N(x_d, x_D)        d = N(x_D)
// and
//   I(X_d; Y | X_D) = (1/n) * sum a * ln(a*d / (b*c)).
// Values are in nats.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psival::cmi {

struct PsiQuad {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t c = 0;
  std::uint64_t d = 0;

  /// 1 <= a <= min(b, c) and max(b, c) <= d.
  bool consistent() const noexcept { return a >= 1 && a <= b && a <= c && b <= d && c <= d; }

  bool operator==(const PsiQuad&) const = default;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// a * ln(a*d / (b*c)); exactly 0 when a*d == b*c.
double quad_term(const PsiQuad& q);

/// Throws CorruptionError if n == 0 or any quad is inconsistent.
double cmi_from_quads(std::span<const PsiQuad> quads, std::uint64_t n);

struct ShapleyEstimate {
  std::string feature_label;
  double value = 0.0;
  std::vector<double> per_permutation_cmi;
  std::size_t permutation_count = 0;
};

/// Plain mean per feature. Every feature must carry the same number (>= 1) of
/// per-permutation values; otherwise ProtocolError(MalformedGroups).
std::vector<ShapleyEstimate> shapley_from_permutations(
    const std::map<std::string, std::vector<double>>& per_feature);

struct ValuationReport {
  static constexpr std::string_view kLogBase = "e";

  std::vector<ShapleyEstimate> estimates;
  std::map<std::string, double> normalized_shares;
  // Set when the values sum to zero; every share is then 0.
  bool degenerate_total = false;
};

ValuationReport normalize_report(std::vector<ShapleyEstimate> estimates);

}  // namespace psival::cmi
