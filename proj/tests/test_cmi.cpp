#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "psival/cmi/cmi.hpp"
#include "psival/cmi/oracle.hpp"
#include "psival/errors.hpp"
#include "psival/psi/permutations.hpp"
#include "support/entropy_oracle.hpp"
#include "support/synth.hpp"

using namespace psival;
using namespace psival::cmi;
using doctest::Approx;

TEST_CASE("feature equal to a balanced binary label is worth ln 2") {
  const std::vector<PsiQuad> q{{2, 2, 2, 4}, {2, 2, 2, 4}};
  CHECK(cmi_from_quads(q, 4) == Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("functional dependence and independence give exactly zero") {
  const std::vector<PsiQuad> dep{{3, 3, 5, 5}, {1, 1, 2, 2}, {7, 7, 7, 7}};
  CHECK(cmi_from_quads(dep, 10) == 0.0);
  const std::vector<PsiQuad> indep(4, PsiQuad{1, 2, 2, 4});
  CHECK(cmi_from_quads(indep, 4) == 0.0);
}

TEST_CASE("quad_term") {
  CHECK(quad_term({1, 2, 2, 4}) == 0.0);
  CHECK(quad_term({2, 2, 2, 4}) == Approx(2.0 * std::log(2.0)));
  CHECK(quad_term({1, 2, 3, 4}) == Approx(std::log(4.0 / 6.0)));
}

TEST_CASE("corrupt counts are rejected") {
  const std::vector<PsiQuad> zero_a{{0, 1, 1, 1}};
  CHECK_THROWS_AS(cmi_from_quads(zero_a, 1), CorruptionError);
  const std::vector<PsiQuad> a_above_b{{3, 2, 3, 4}};
  CHECK_THROWS_AS(cmi_from_quads(a_above_b, 4), CorruptionError);
  const std::vector<PsiQuad> c_above_d{{1, 1, 5, 4}};
  CHECK_THROWS_AS(cmi_from_quads(c_above_d, 4), CorruptionError);
  const std::vector<PsiQuad> ok{{1, 1, 1, 1}};
  CHECK_THROWS_AS(cmi_from_quads(ok, 0), CorruptionError);
  CHECK(cmi_from_quads({}, 3) == 0.0);
}

TEST_CASE("compensated sum keeps small terms") {
  CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1000.0);
}

TEST_CASE("shapley means") {
  auto est = shapley_from_permutations({{"f1", {0.5, 0.7}}});
  REQUIRE(est.size() == 1);
  CHECK(est[0].value == Approx(0.6));
  CHECK(est[0].permutation_count == 2);

  est = shapley_from_permutations({{"f1", {0.123}}, {"f2", {0.0}}});
  CHECK(est[0].value == 0.123);
  CHECK(est[1].value == 0.0);

  CHECK_THROWS_AS(shapley_from_permutations({{"f1", {0.1, 0.2}}, {"f2", {0.1}}}), ProtocolError);
  CHECK_THROWS_AS(shapley_from_permutations({{"f1", {}}}), ProtocolError);
}

TEST_CASE("normalize_report") {
  std::vector<ShapleyEstimate> e(2);
  e[0].feature_label = "a";
  e[0].value = 1.0;
  e[1].feature_label = "b";
  e[1].value = 3.0;
  auto r = normalize_report(e);
  CHECK(r.normalized_shares["a"] == Approx(0.25));
  CHECK(r.normalized_shares["b"] == Approx(0.75));
  CHECK_FALSE(r.degenerate_total);

  e[0].value = 0.0;
  e[1].value = 0.0;
  r = normalize_report(e);
  CHECK(r.degenerate_total);
  CHECK(r.normalized_shares["a"] == 0.0);
  CHECK(r.normalized_shares["b"] == 0.0);
  CHECK(ValuationReport::kLogBase == "e");
}

TEST_CASE("direct oracle examples") {
  const BinColumn y{0, 0, 1, 1};
  const BinColumn x = y;
  const BinColumn c{0, 0, 0, 0};
  const std::vector<Ordering> one{{"x"}};
  auto est = oracle_shapley_cmi({{"x", x}}, y, one);
  REQUIRE(est.size() == 1);
  CHECK(est[0].value == Approx(std::log(2.0)).epsilon(1e-15));

  const std::vector<Ordering> both{{"c", "x"}, {"x", "c"}};
  est = oracle_shapley_cmi({{"x", x}, {"c", c}}, y, both);
  CHECK(est[0].feature_label == "c");
  CHECK(est[0].value == 0.0);
  for (double v : est[0].per_permutation_cmi) CHECK(v == 0.0);

  const std::vector<Ordering> bad{{"x"}};
  CHECK_THROWS(oracle_shapley_cmi({{"x", x}, {"c", c}}, y, bad));
}

TEST_CASE("direct_cmi agrees with the entropy route") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 30; ++round) {
    const auto s = test::make_synth(rng, 20 + rng() % 100, 3, 4, 3);
    const auto& f0 = s.features.at("f0");
    const auto& f1 = s.features.at("f1");
    const auto& f2 = s.features.at("f2");
    const BinColumn* cond[] = {&f1, &f2};
    CHECK(direct_cmi(cond, f0, s.label) == Approx(test::entropy_cmi(f0, s.label, {&f1, &f2})).epsilon(1e-12));
    CHECK(direct_cmi({}, f0, s.label) == Approx(test::entropy_cmi(f0, s.label, {})).epsilon(1e-12));
  }
}

TEST_CASE("all orderings reproduce the factorial-weighted subset sum") {
  std::mt19937_64 rng(9);
  for (int round = 0; round < 10; ++round) {
    const auto s = test::make_synth(rng, 60, 3, 3);
    const auto orderings = psi::all_orderings(s.feature_labels());
    CHECK(orderings.size() == 6);
    const auto est = oracle_shapley_cmi(s.features, s.label, orderings);
    const auto exact = test::exact_shapley(s.features, s.label);
    double total = 0;
    for (const auto& e : est) {
      CHECK(std::abs(e.value - exact.at(e.feature_label)) <= 1e-9);
      total += e.value;
    }
    CHECK(std::abs(total - test::joint_mi(s.features, s.label)) <= 1e-9);
  }
}
