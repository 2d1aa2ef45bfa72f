#include "psival/cmi/cmi.hpp"

#include <cmath>

#include "psival/errors.hpp"

namespace psival::cmi {

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

double quad_term(const PsiQuad& q) {
  const unsigned __int128 num = static_cast<unsigned __int128>(q.a) * q.d;
  const unsigned __int128 den = static_cast<unsigned __int128>(q.b) * q.c;
  if (num == den) return 0.0;
  return static_cast<double>(q.a) *
         std::log(static_cast<double>(num) / static_cast<double>(den));
}

double cmi_from_quads(std::span<const PsiQuad> quads, std::uint64_t n) {
  if (n == 0) throw CorruptionError("cmi_from_quads: common id count is zero");
  CompensatedSum sum;
  for (const auto& q : quads) {
    if (!q.consistent()) {
      throw CorruptionError("inconsistent quad {" + std::to_string(q.a) + "," + std::to_string(q.b) +
                            "," + std::to_string(q.c) + "," + std::to_string(q.d) + "}");
    }
    sum.add(quad_term(q));
  }
  return sum.value() / static_cast<double>(n);
}

std::vector<ShapleyEstimate> shapley_from_permutations(
    const std::map<std::string, std::vector<double>>& per_feature) {
  std::vector<ShapleyEstimate> out;
  if (per_feature.empty()) return out;
  const std::size_t count = per_feature.begin()->second.size();
  if (count == 0) throw ProtocolError(ErrorCode::MalformedGroups, "no permutations to average");
  out.reserve(per_feature.size());
  for (const auto& [label, cmis] : per_feature) {
    if (cmis.size() != count) {
      throw ProtocolError(ErrorCode::MalformedGroups,
                          "feature " + label + " has " + std::to_string(cmis.size()) +
                              " permutation values, expected " + std::to_string(count));
    }
    CompensatedSum sum;
    for (double v : cmis) sum.add(v);
    out.push_back(ShapleyEstimate{label, sum.value() / static_cast<double>(count), cmis, count});
  }
  return out;
}

ValuationReport normalize_report(std::vector<ShapleyEstimate> estimates) {
  ValuationReport report;
  CompensatedSum total;
  for (const auto& e : estimates) total.add(e.value);
  const double sum = total.value();
  report.degenerate_total = (sum == 0.0);
  for (const auto& e : estimates) {
    report.normalized_shares[e.feature_label] = report.degenerate_total ? 0.0 : e.value / sum;
  }
  report.estimates = std::move(estimates);
  return report;
}

}  // namespace psival::cmi
