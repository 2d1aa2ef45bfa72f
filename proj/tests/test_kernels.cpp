#include <doctest.h>

#include <random>
#include <vector>

#include "psival/errors.hpp"
#include "psival/kernels/kernels.hpp"

using namespace psival;
using namespace psival::kernels;

namespace {

std::vector<std::uint32_t> random_vec(std::mt19937_64& rng, std::size_t n, std::uint32_t bound) {
  std::vector<std::uint32_t> v(n);
  for (auto& x : v) x = bound == 0 ? static_cast<std::uint32_t>(rng()) : static_cast<std::uint32_t>(rng() % bound);
  return v;
}

template <typename Combine, typename Max>
void check_variant(Combine combine, Max max_fn) {
  std::mt19937_64 rng(17);
  for (std::size_t n = 0; n <= 67; ++n) {
    for (std::uint32_t bound : {4u, 1000u, 0u}) {
      const auto major = random_vec(rng, n, bound);
      const auto minor = random_vec(rng, n, bound);
      const std::uint32_t radix = bound == 0 ? static_cast<std::uint32_t>(rng()) : bound;
      std::vector<std::uint32_t> want(n), got(n);
      scalar::combine_keys(major, radix, minor, want);
      combine(std::span<const std::uint32_t>(major), radix, std::span<const std::uint32_t>(minor),
              std::span<std::uint32_t>(got));
      CHECK(got == want);
      CHECK(max_fn(std::span<const std::uint32_t>(major)) == scalar::max_value(major));
    }
  }
  std::vector<std::uint32_t> top(33, 0);
  top[32] = 0xffffffffu;
  CHECK(max_fn(std::span<const std::uint32_t>(top)) == 0xffffffffu);
}

}  // namespace

TEST_CASE("scalar reference") {
  const std::vector<std::uint32_t> major{0, 1, 2, 3};
  const std::vector<std::uint32_t> minor{3, 2, 1, 0};
  std::vector<std::uint32_t> out(4);
  scalar::combine_keys(major, 4, minor, out);
  CHECK(out == std::vector<std::uint32_t>{3, 6, 9, 12});
  CHECK(scalar::max_value(major) == 3);
  CHECK(scalar::max_value({}) == 0);
}

TEST_CASE("dispatched kernels match the scalar reference") {
  check_variant([](auto a, auto r, auto b, auto o) { combine_keys(a, r, b, o); },
                [](auto v) { return max_value(v); });
}

#if defined(PSIVAL_HAVE_AVX2_KERNELS)
TEST_CASE("avx2 kernels match the scalar reference") {
  if (!isa_supported(Isa::Avx2)) {
    MESSAGE("CPU lacks AVX2; skipped");
    return;
  }
  check_variant([](auto a, auto r, auto b, auto o) { avx2::combine_keys(a, r, b, o); },
                [](auto v) { return avx2::max_value(v); });
}
#endif

#if defined(PSIVAL_HAVE_NEON_KERNELS)
TEST_CASE("neon kernels match the scalar reference") {
  check_variant([](auto a, auto r, auto b, auto o) { neon::combine_keys(a, r, b, o); },
                [](auto v) { return neon::max_value(v); });
}
#endif

TEST_CASE("isa override") {
  CHECK(parse_isa("scalar") == Isa::Scalar);
  CHECK(parse_isa("avx2") == Isa::Avx2);
  CHECK_FALSE(parse_isa("sse9").has_value());
  CHECK(isa_supported(Isa::Scalar));
  set_isa_override(Isa::Scalar);
  CHECK(active_isa() == Isa::Scalar);
  set_isa_override(std::nullopt);
  if (!isa_supported(Isa::Neon)) CHECK_THROWS_AS(set_isa_override(Isa::Neon), ConfigError);
}
